"""The recursive formal-reduction driver.

Implements the decision cascade: split along distinct eigenvalue groups of
the leading constant matrix, shift a unique nonzero eigenvalue into the
exponential part, resolve turning points when the leading coefficient is
non-nilpotent, and otherwise rank-reduce; in the doubly-nilpotent
irreducible state the exponential order dictates the eps ramification.
Scalar systems integrate their pole part directly; nonpositive-rank systems
are regular leaves whose power-series tails are out of scope here.

Everything restarts from the exact input with doubled truncation orders when
a truncated decision cannot be certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .coeff import QQ, AlgebraicNumber
from .errors import InsufficientOrder, PreconditionError, Stalled
from .linalg import PerturbedSystem, Trunc, mat_map
from .reduce import (
    cmat_nilpotent,
    eigen_shift,
    eigenvalue_groups,
    eps_rank_reduce,
    exp_order_system,
    katz_ramify,
    ramify_system,
    resolve_turning_point,
    split,
    _A0_nilpotent,
)
from .series import INF, BiSeries, PuiseuxSeries

F = Fraction


@dataclass(frozen=True)
class Config:
    xi_order: int = 0            # 0: derive from the input size
    x_order: int = 0
    max_ramification: int = 64
    max_restarts: int = 5
    max_steps: int = 200

    def base_trunc(self, n, h):
        base = Trunc.for_system(n, h)
        xi = self.xi_order or base.xi_order
        xo = F(self.x_order) if self.x_order else base.x_order
        return Trunc(xi_order=xi, x_order=xo, x_certainty=xo / 2, eps_certainty=max(4, xi // 2))


@dataclass
class ExpTerm:
    coeff: AlgebraicNumber
    x_exp: Fraction
    eps_exp: Fraction        # in original eps units, < 0
    is_log: bool = False

    def sort_key(self):
        return (self.eps_exp, self.x_exp, self.is_log)

    def to_str(self, var="x"):
        cs = self.coeff.to_str()
        if " + " in cs or " - " in cs:
            cs = "(%s)" % cs
        parts = [cs]
        if self.is_log:
            parts.append("log(%s)" % var)
        elif self.x_exp != 0:
            parts.append(_pow(var, self.x_exp))
        parts.append(_pow("eps", self.eps_exp))
        if parts[0] == "1" and len(parts) > 1:
            parts = parts[1:]
        elif parts[0] == "-1" and len(parts) > 1:
            parts = ["-" + parts[1]] + parts[2:]
        return "*".join(parts)

    def to_dict(self, var="x"):
        return {
            "coeff": self.coeff.to_str(),
            "x_exp": str(self.x_exp),
            "eps_exp": str(self.eps_exp),
            "log": self.is_log,
            "text": self.to_str(var),
        }


def _pow(name, e):
    e = F(e)
    if e == 1:
        return name
    if e.denominator == 1 and e >= 0:
        return "%s^%d" % (name, e.numerator)
    return "%s^(%s)" % (name, e)


@dataclass
class Branch:
    multiplicity: int
    terms: list
    kind: str = "scalar"

    def to_dict(self, var="x"):
        return {
            "multiplicity": self.multiplicity,
            "kind": self.kind,
            "terms": [t.to_dict(var) for t in sorted(self.terms, key=lambda t: t.sort_key())],
        }


@dataclass
class ExpPart:
    branches: list
    var: str = "x"

    def total_multiplicity(self):
        return sum(b.multiplicity for b in self.branches)

    def to_dict(self):
        return {"var": self.var, "branches": [b.to_dict(self.var) for b in self.branches]}


@dataclass
class TraceNode:
    kind: str
    before: dict = field(default_factory=dict)
    after: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    children: list = field(default_factory=list)
    rho: object = None

    def to_dict(self):
        out = {"kind": self.kind, "before": self.before, "after": self.after, "info": self.info}
        if self.rho is not None:
            out["rho"] = str(self.rho) if self.rho != INF else "infinity"
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class ReductionTrace:
    root: TraceNode
    rho_base: Fraction = F(0)

    def leaves(self):
        return [n for n in self.root.walk() if n.kind.startswith("leaf")]

    def to_dict(self):
        return {"rho_base": str(self.rho_base), "tree": self.root.to_dict()}


@dataclass
class InputSystem:
    """Exact raw operator dF/dvar = op F; the restart-and-double policy and
    the stretching both act on this object."""

    op: list
    var: str = "x"
    d: int = 1

    @property
    def n(self):
        return len(self.op)

    def guess_h(self):
        h = 1
        for row in self.op:
            for e in row:
                for k, f in e.t.items():
                    if f.c:
                        h = max(h, -k)
        return h

    def to_system(self, ctx):
        return PerturbedSystem.from_op(self.op, ctx, d=self.d, var=self.var)


def input_from_presentation(n, h, p, sigma, entries, var="x"):
    """entries: matrix of raw BiSeries A_ij with the equation
    xi^h x^p dF = A F, xi = x^sigma eps."""
    op = [[e.mul_monomial(QQ.one(), -(F(sigma) * h + F(p)), -h) for e in row] for row in entries]
    return InputSystem(op, var=var)


# ---------------------------------------------------------------------------
# base-case integrations
# ---------------------------------------------------------------------------


def integrate_rank1(sys):
    """Pole part of the integral of a scalar operator: terms with negative
    eps exponent, integrated termwise in the space variable; the x^-1
    integrand carries a logarithm flag."""
    if sys.n != 1:
        raise PreconditionError("integrate_rank1 expects a scalar system")
    b = sys.op()[0][0]
    out = []
    for k in sorted(b.t):
        if k >= 0:
            continue
        f = b.t[k]
        for e in sorted(f.c):
            c = f.c[e]
            if e == -1:
                out.append(ExpTerm(c, F(0), F(k, sys.d), True))
            else:
                out.append(ExpTerm(c / (e + 1), e + 1, F(k, sys.d), False))
    return out


def _shift_terms(raw_terms, d):
    out = []
    for coeff, xe, ke, is_log in raw_terms:
        out.append(ExpTerm(coeff, xe, F(ke, d), is_log))
    return out


# ---------------------------------------------------------------------------
# the cascade
# ---------------------------------------------------------------------------


def _sysinfo(sys):
    return {"n": sys.n, "h": sys.h, "p": str(sys.p), "sigma": str(sys.sigma), "d": sys.d}


def _leaf_rho(sys, rho_base):
    if sys.sigma == 0:
        return INF
    return rho_base - F(1, sys.d) / sys.sigma


def _cascade(sys, inherited, cfg, rho_base, steps):
    nodes = []
    branches = []
    while True:
        steps[0] += 1
        if steps[0] > cfg.max_steps:
            raise PreconditionError("reduction exceeded the step budget")
        if sys.d > cfg.max_ramification:
            raise PreconditionError("ramification exceeded the configured bound")
        if sys.is_zero_system() or sys.h <= 0:
            leaf = TraceNode("leaf-regular", before=_sysinfo(sys), info={"residual": sys.describe()})
            leaf.rho = _leaf_rho(sys, rho_base)
            nodes.append(leaf)
            branches.append(Branch(sys.n, list(inherited), kind="regular"))
            return branches, nodes
        if sys.n == 1:
            terms = integrate_rank1(sys)
            leaf = TraceNode("leaf-scalar", before=_sysinfo(sys))
            leaf.rho = _leaf_rho(sys, rho_base)
            nodes.append(leaf)
            branches.append(Branch(1, list(inherited) + terms, kind="scalar"))
            return branches, nodes
        groups = eigenvalue_groups(sys.A00())
        if len(groups) >= 2:
            sp = split(sys)
            node = TraceNode("split", before=_sysinfo(sys),
                             info={"blocks": [len(b) for b in sp.blocks]})
            for sub in sp.subsystems:
                sub_branches, sub_nodes = _cascade(sub, inherited, cfg, rho_base, steps)
                node.children.extend(sub_nodes)
                branches.extend(sub_branches)
            nodes.append(node)
            return branches, nodes
        gamma = groups[0][0]
        if not gamma.is_zero():
            sys2, raw_terms, _ = eigen_shift(sys, gamma)
            inherited = list(inherited) + _shift_terms(raw_terms, sys.d)
            nodes.append(TraceNode("shift", before=_sysinfo(sys), after=_sysinfo(sys2),
                                   info={"gamma": gamma.to_str()}))
            sys = sys2
            continue
        if not _A0_nilpotent(sys, sys.ctx):
            res = resolve_turning_point(sys)
            nodes.append(TraceNode("turning", before=_sysinfo(sys), after=_sysinfo(res.sys),
                                   info={"s": res.s}))
            sys = res.sys
            continue
        # doubly nilpotent: rank reduction, then possibly the omega path
        rr = eps_rank_reduce(sys)
        node = TraceNode("rank-reduce", before=_sysinfo(sys), after=_sysinfo(rr.sys),
                         info={"h_history": [[h, r] for (h, r) in rr.h_history],
                               "ramified_by": rr.ramified_by})
        nodes.append(node)
        if rr.h_true_zero:
            leaf = TraceNode("leaf-complete", before=_sysinfo(rr.sys),
                             info={"residual": rr.sys.describe()})
            leaf.rho = _leaf_rho(rr.sys, rho_base)
            nodes.append(leaf)
            branches.append(Branch(sys.n, list(inherited), kind="complete"))
            return branches, nodes
        sys = rr.sys
        if sys.h <= 0 or sys.n == 1:
            continue
        groups = eigenvalue_groups(sys.A00())
        if len(groups) >= 2 or not groups[0][0].is_zero() or not _A0_nilpotent(sys, sys.ctx):
            continue
        # irreducible and doubly nilpotent: use the exponential order
        eo = exp_order_system(sys)
        if eo.omega == 0:
            leaf = TraceNode("leaf-complete", before=_sysinfo(sys),
                             info={"residual": sys.describe(), "omega": "0"})
            leaf.rho = _leaf_rho(sys, rho_base)
            nodes.append(leaf)
            branches.append(Branch(sys.n, list(inherited), kind="complete"))
            return branches, nodes
        dd = eo.omega.denominator
        attempted = []
        progressed = False
        for use_katz in (False, True):
            if use_katz:
                if eo.guard_ok:
                    break
                sys_k, d_used, rr_k = katz_ramify(sys)
                eo = exp_order_system(sys_k)
                dd = eo.omega.denominator
                work = sys_k
                attempted.append("katz d=%d" % d_used)
            else:
                work = sys
            if dd <= 1:
                continue
            cand = ramify_system(work, dd)
            rr2 = eps_rank_reduce(cand)
            out = rr2.sys
            if out.h <= 0 or out.n == 1 or rr2.h_true_zero:
                progressed = True
            else:
                g2 = eigenvalue_groups(out.A00())
                progressed = len(g2) >= 2 or not g2[0][0].is_zero() or not _A0_nilpotent(out, out.ctx)
            if progressed:
                nodes.append(TraceNode("ramify", before=_sysinfo(sys), after=_sysinfo(out),
                                       info={"omega": str(eo.omega), "d": dd,
                                             "polynomial": eo.poly_str(sys.var),
                                             "attempts": attempted}))
                sys = out
                break
        if not progressed:
            raise Stalled("reduction stalled at the rank-1 dead end; omega fully computed",
                          omega=eo.omega)


def formal_reduce(source, cfg=None, rho_base=F(0)):
    """Run the cascade with the restart-and-double truncation policy.

    `source` is an InputSystem (exact; restartable) or a PerturbedSystem
    (used as given)."""
    cfg = cfg or Config()
    if isinstance(source, PerturbedSystem):
        inputs = None
        base = source.ctx
    else:
        inputs = source
        base = cfg.base_trunc(inputs.n, inputs.guess_h())
    last = None
    for attempt in range(cfg.max_restarts):
        try:
            sys = source if inputs is None else inputs.to_system(base)
            steps = [0]
            branches, nodes = _cascade(sys, [], cfg, rho_base, steps)
            root = TraceNode("root", before=_sysinfo(sys), info={"restarts": attempt})
            root.children = nodes
            part = ExpPart(branches, var=sys.var)
            if part.total_multiplicity() != sys.n:
                raise PreconditionError("branch multiplicities do not sum to the dimension")
            return part, ReductionTrace(root, rho_base)
        except InsufficientOrder as exc:
            last = exc
            base = base.doubled()
            if inputs is None:
                raise
    raise last


# ---------------------------------------------------------------------------
# stretching and restraining indices
# ---------------------------------------------------------------------------


def stretch(inputs, rho):
    """Substitute x = tau eps^rho in an exact input system (d/dx becomes
    eps^-rho d/dtau), refining the eps lattice as needed."""
    rho = F(rho)
    if rho == 0:
        return inputs
    if rho < 0:
        raise PreconditionError("stretch exponent must be positive")
    if inputs.d != 1:
        raise PreconditionError("stretch applies to unramified inputs")
    den = rho.denominator
    for row in inputs.op:
        for e in row:
            for k, f in e.t.items():
                for a in f.c:
                    q = k + a * rho
                    den = den * q.denominator // _gcd(den, q.denominator)
    out = []
    for row in inputs.op:
        r = []
        for e in row:
            terms = {}
            for k, f in e.t.items():
                for a, c in f.c.items():
                    ke = (k + a * rho + rho) * den  # the extra rho: d/dx = eps^-rho d/dtau
                    ke = int(ke)
                    ps = terms.setdefault(ke, {})
                    ps[a] = ps.get(a, QQ.zero()) + c
            r.append(BiSeries({k: PuiseuxSeries(v) for k, v in terms.items()}))
        out.append(r)
    return InputSystem(out, var="tau", d=den)


def _gcd(a, b):
    a, b = int(a), int(b)
    while b:
        a, b = b, a % b
    return a


def restraining_indices(trace):
    """Sorted distinct restraining indices collected over the leaves with a
    finite reading (sigma_final < 0): rho = rho_base - 1/(d sigma)."""
    out = set()
    for leaf in trace.leaves():
        if leaf.rho is not None and leaf.rho != INF:
            out.add(F(leaf.rho))
    return sorted(out)


def iterative_restraining(inputs, cfg=None, max_rounds=8):
    """Explore stretchings: reduce the original input, stretch by each newly
    discovered index, and repeat until no new index appears."""
    cfg = cfg or Config()
    found = set()
    queue = [F(0)]
    seen_rho = {F(0)}
    rounds = 0
    while queue and rounds < max_rounds:
        rounds += 1
        rho = queue.pop(0)
        src = inputs if rho == 0 else stretch(inputs, rho)
        try:
            _, trace = formal_reduce(src, cfg, rho_base=rho)
        except Stalled:
            continue
        for r in restraining_indices(trace):
            if r not in found:
                found.add(r)
                if r not in seen_rho:
                    seen_rho.add(r)
                    queue.append(r)
    return sorted(found)
