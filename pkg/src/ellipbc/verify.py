"""Scenario runner: named numerical checks, built-in suites, TOML configs and JSON reports.

A scenario fixes (r, n), the bases and a seed; each of its checks draws random
parameters from that seed, evaluates an identity through two independent code
paths and records the residual.  Checks that fail by raising are reported as
failures with the error message and never abort the other checks.
"""

from __future__ import annotations

import itertools
import json
import math
import platform
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .closed_forms import (
    J0,
    c_rn,
    c_rn_recurrence,
    detI_closed,
    detK_closed,
    detKa_closed,
    selberg_shift_ratio,
    selberg_closed,
)
from .cohom import (
    A_det_closed,
    A_matrix,
    A_rescaled,
    A_rescaled_det_closed,
    B_det_closed,
    B_matrix,
    C_lambda_k,
    M_matrix,
    ParamSet,
    S_entry,
)
from .combi import enumerate_compositions, reference_point
from .errors import ConfigError, EllipError
from .interp import (
    E_eval,
    E_explicit,
    F_mu,
    dual_cauchy_residual,
    partition_identity_check,
    special_value,
    transC_det_closed,
    transC_entry,
    transC_matrix,
    transition_to_reference_det_closed,
)
from .qseries import Bases, e_pair, ell_gamma, theta
from .torusquad import (
    I_matrix,
    I_matrix_direct,
    K_matrix,
    QuadPolicy,
    basis_on_grid,
    check_psi_region,
    coboundary_on_grid,
    integrate,
    pair,
    psi_on_grid,
    refine,
)
from .trig import (
    E_trig,
    K_trig_matrix,
    X_matrix,
    detK_tilde_closed,
    detK_trig_closed,
    detX_closed,
    gustafson_AW,
    gustafson_NR,
    schur_transition_det,
    schur_transition_matrix,
    sphi_on_grid,
    sphi_tilde_on_grid,
)

__all__ = [
    "SCHEMA_VERSION",
    "DEFAULT_SEED",
    "CheckSpec",
    "Scenario",
    "Measurement",
    "CheckResult",
    "Report",
    "CHECKS",
    "SUITES",
    "suite",
    "run_scenarios",
    "run",
    "load_config",
    "parse_config",
    "qde_residuals",
]

SCHEMA_VERSION = 1
DEFAULT_SEED = 0x5EED_E11B_C0DE_2024


@dataclass(frozen=True)
class CheckSpec:
    name: str
    tol: float


@dataclass
class Scenario:
    """One parameter regime and the checks to run in it.

    ``radius`` overrides the modulus of randomly drawn parameters; explicit
    ``a``, ``x``, ``y``, ``u``, ``v`` replace the random draws entirely.
    ``s`` is the number of interpolation parameters for interp checks.
    """

    name: str
    r: int
    n: int
    bases: Bases
    checks: list
    s: int | None = None
    seed: int | None = None
    radius: float | None = None
    cases: int | None = None
    balancing: str = "pq"
    policy: QuadPolicy = field(default_factory=QuadPolicy)
    a: tuple | None = None
    x: tuple | None = None
    y: tuple | None = None
    u: tuple | None = None
    v: tuple | None = None
    criterion: int | None = None
    optional: bool = False

    def validate(self) -> None:
        if self.r < 1 or self.n < 0:
            raise ConfigError(f"{self.name}: need r >= 1 and n >= 0")
        for spec in self.checks:
            if spec.name not in CHECKS:
                raise ConfigError(f"{self.name}: unknown check {spec.name!r}")
            if not spec.tol > 0:
                raise ConfigError(f"{self.name}: tolerance of {spec.name!r} must be positive")

    def regime(self) -> dict:
        p, q, t = self.bases.p, self.bases.q, self.bases.t
        flags = {
            "abs_p": abs(p),
            "abs_q": abs(q),
            "abs_t": abs(t),
            "p_below_t_power": abs(p) < abs(t) ** (2 * self.n - 2) if self.n >= 1 else True,
            "trigonometric": p == 0,
        }
        if self.a is not None:
            flags["params_inside_disk"] = all(abs(x) < 1 for x in self.a)
        return flags


@dataclass
class Measurement:
    label: str
    computed: complex | None
    reference: complex | None
    abs_residual: float
    rel_residual: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class CheckResult:
    scenario: str
    check: str
    label: str
    tolerance: float
    computed: complex | None
    reference: complex | None
    abs_residual: float | None
    rel_residual: float | None
    passed: bool
    seconds: float
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None
    criterion: int | None = None

    @property
    def key(self) -> str:
        tail = f"[{self.label}]" if self.label else ""
        return f"{self.scenario}/{self.check}{tail}"

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.error:
            return f"{status} {self.key}: {self.error}"
        return f"{status} {self.key}: residual {self.rel_residual:.3e} (tol {self.tolerance:.1e})"


def _complex_json(z):
    if z is None:
        return None
    z = complex(z)
    return [z.real, z.imag]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _complex_json(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class Report:
    seed: int
    tol_scale: float
    scenarios: list
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return _jsonable({
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "tol_scale": self.tol_scale,
            "versions": {
                "ellipbc": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "passed": self.passed,
            "summary": {
                "checks": len(self.results),
                "passed": sum(r.passed for r in self.results),
                "failed": sum(not r.passed for r in self.results),
            },
            "scenarios": self.scenarios,
            "results": [
                {**asdict(r), "computed": _complex_json(r.computed), "reference": _complex_json(r.reference)}
                for r in self.results
            ],
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]


class _Context:
    """Per-scenario state handed to check functions: seeded RNG and a result cache."""

    def __init__(self, sc: Scenario, seed: int):
        self.sc = sc
        self.b = sc.bases
        self.seed = seed
        self.cache: dict = {}
        self._seed_seq = np.random.SeedSequence([seed & (2**64 - 1), zlib.crc32(sc.name.encode())])

    def rng(self, purpose: str) -> np.random.Generator:
        """A generator per check so results do not depend on check order."""
        return np.random.default_rng([*self._seed_seq.entropy, zlib.crc32(purpose.encode())])

    def memo(self, key, compute: Callable):
        if key not in self.cache:
            self.cache[key] = compute()
        return self.cache[key]

    def radius(self, default: float) -> float:
        return self.sc.radius if self.sc.radius is not None else default

    def explicit(self, name: str, count: int) -> list | None:
        values = getattr(self.sc, name)
        if values is None:
            return None
        if len(values) != count:
            raise ConfigError(f"{self.sc.name}: {name} needs {count} entries, got {len(values)}")
        return [complex(x) for x in values]


def _points(rng: np.random.Generator, count: int, rho: float, spread: float = 0.05) -> list[complex]:
    mods = rho * (1 + spread * rng.uniform(-1, 1, count))
    phases = rng.uniform(-np.pi, np.pi, count)
    return [complex(m * np.exp(1j * ph)) for m, ph in zip(mods, phases)]


def _compare(label: str, computed, reference, **diag) -> Measurement:
    computed, reference = complex(computed), complex(reference)
    err = abs(computed - reference)
    return Measurement(label, computed, reference, err, err / max(abs(reference), 1e-300), diag)


def _compare_matrix(label: str, computed: np.ndarray, reference: np.ndarray, **diag) -> Measurement:
    diff = np.abs(computed - reference)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    err = float(diff[idx])
    scale = max(float(np.max(np.abs(reference))), 1e-300)
    return Measurement(label, computed[idx], reference[idx], err, err / scale, diag)


def _worst(label: str, items: Sequence[Measurement], **diag) -> Measurement:
    worst = max(items, key=lambda m: m.rel_residual)
    return Measurement(label, worst.computed, worst.reference, worst.abs_residual, worst.rel_residual,
                       {"cases": len(items), **worst.diagnostics, **diag})


def _pq_params(ctx: _Context, rng, rho: float, mode: str = "pq") -> ParamSet:
    sc = ctx.sc
    m = 2 * sc.r + 4
    explicit = ctx.explicit("a", m)
    if explicit is not None:
        out = ParamSet(explicit, sc.r, sc.n, mode)
        if out.balance_residual(ctx.b) > 1e-10:
            raise ConfigError(f"{sc.name}: explicit a violates the {mode} balancing")
        return out
    return ParamSet.balanced(_points(rng, m - 1, rho), sc.r, sc.n, ctx.b, mode)


def _symmetric_radius(ctx: _Context, m: int) -> float:
    """Common modulus making all |a_k| equal under pq-balancing."""
    b = ctx.b
    return (abs(b.p * b.q) / abs(b.t) ** (2 * ctx.sc.n - 2)) ** (1 / m)


# scalar functional equations

def check_functional_equations(ctx: _Context) -> list[Measurement]:
    b = ctx.b
    count = ctx.sc.cases or 500
    rng = ctx.rng("functional")
    u = np.array(_points(rng, count, 0.9, spread=0.5))
    v = np.array(_points(rng, count, 0.9, spread=0.5))
    p, q = b.p, b.q

    def worst(label, lhs, rhs):
        err = np.abs(lhs - rhs)
        rel = err / np.abs(rhs)
        i = int(np.argmax(rel))
        return Measurement(label, lhs[i], rhs[i], float(err[i]), float(rel[i]), {"cases": count})

    gu = ell_gamma(u, p, q)
    return [
        worst("theta_p_shift", theta(p * u, p), -theta(u, p) / u),
        worst("theta_inversion", theta(1 / u, p), -theta(u, p) / u),
        worst("gamma_q_shift", ell_gamma(q * u, p, q), theta(u, p) * gu),
        worst("gamma_p_shift", ell_gamma(p * u, p, q), theta(u, q) * gu),
        worst("gamma_reflection", gu * ell_gamma(p * q / u, p, q), np.ones(count, dtype=complex)),
        worst("e_antisymmetry", e_pair(u, v, p), -e_pair(v, u, p)),
        worst("e_inversion", e_pair(u, 1 / v, p), e_pair(u, v, p)),
    ]


# interpolation functions

def _interp_size(ctx: _Context) -> tuple[int, int]:
    return (ctx.sc.s or ctx.sc.r + 1), ctx.sc.n


def check_kronecker(ctx: _Context) -> list[Measurement]:
    s, n = _interp_size(ctx)
    b = ctx.b
    c = _points(ctx.rng("kronecker"), s, ctx.radius(0.8))
    Z = enumerate_compositions(s, n)
    items = []
    for mu in Z:
        for nu in Z:
            value = E_eval(c, mu, reference_point(c, b.t, nu), b.p, b.t)
            target = 1.0 if mu == nu else 0.0
            err = abs(value - target)
            items.append(Measurement(f"{mu},{nu}", value, target, err, err))
    return [_worst("max_abs", items)]


def check_interp_identities(ctx: _Context) -> list[Measurement]:
    s, n = _interp_size(ctx)
    b = ctx.b
    p, t = b.p, b.t
    count = ctx.sc.cases or 50
    rng = ctx.rng("interp")
    rho = ctx.radius(0.8)
    Z = enumerate_compositions(s, n)
    explicit, cauchy, split, special, transition = [], [], [], [], []
    for _ in range(count):
        c = _points(rng, s, rho, spread=0.15)
        z = _points(rng, n, 1.0, spread=0.2)
        values = {mu: E_eval(c, mu, z, p, t) for mu in Z}
        scale = max(abs(x) for x in values.values())
        for mu in Z:
            other = E_explicit(c, mu, z, p, t)
            err = abs(values[mu] - other)
            explicit.append(Measurement("", values[mu], other, err, err / scale))

        w = _points(rng, s - 1, 0.9, spread=0.2)
        err = dual_cauchy_residual(c, z, w, p, t)
        cauchy.append(Measurement("", None, None, err, err))

        if n >= 2:
            lam = Z[int(rng.integers(len(Z)))]
            err = partition_identity_check(c, lam, z, int(rng.integers(1, n)), p, t)
            split.append(Measurement("", None, None, err, err))

        u0 = _points(rng, 1, 0.9)[0]
        mu = Z[int(rng.integers(len(Z)))]
        closed = special_value(c, mu, u0, p, t)
        direct = E_eval(c, mu, [u0 * t**j for j in range(n)], p, t)
        special.append(_compare("", direct, closed))

        d = _points(rng, 1, rho)[0]
        other = c[:-1] + [d]
        mu = Z[int(rng.integers(len(Z)))]
        terms = [transC_entry(c[:-1], c[-1], d, mu, nu, p, t) * E_eval(other, nu, z, p, t) for nu in Z]
        size = max(abs(values[mu]), sum(abs(x) for x in terms))
        err = abs(values[mu] - sum(terms))
        transition.append(Measurement("", values[mu], sum(terms), err, err / size))

    out = [
        _worst("recursion_vs_explicit", explicit),
        _worst("dual_cauchy", cauchy),
        _worst("special_value", special),
        _worst("transition_expansion", transition),
    ]
    if split:
        out.insert(2, _worst("partition_identity", split))
    return out


# transition determinants

def check_det_C(ctx: _Context) -> list[Measurement]:
    r, n = ctx.sc.r, ctx.sc.n
    b = ctx.b
    a = ctx.explicit("a", r + 1) or _points(ctx.rng("detC"), r + 1, ctx.radius(0.8))
    I, k, l = list(range(r - 1)), r - 1, r
    C = transC_matrix(a, I, k, l, n, b.p, b.t)
    return [_compare("det", np.linalg.det(C), transC_det_closed(a, I, k, l, n, b.p, b.t))]


def check_det_B(ctx: _Context) -> list[Measurement]:
    r, n = ctx.sc.r, ctx.sc.n
    b = ctx.b
    a = _pq_params(ctx, ctx.rng("detB"), ctx.radius(0.85), mode="one")
    I, k = tuple(range(r - 1)), r - 1
    out = []
    for l in sorted({r, a.m - 1}):
        B = B_matrix(a, I, k, l, n, b)
        out.append(_compare(f"l={l}", np.linalg.det(B), B_det_closed(a, I, k, l, n, b)))
    return out


def check_c_rn(ctx: _Context) -> list[Measurement]:
    b = ctx.b
    top = max(ctx.sc.r, 1)
    items = []
    for r in range(1, top + 1):
        for n in range(0, ctx.sc.n + 1):
            items.append(_compare(f"r={r},n={n}", c_rn(r, n, b), c_rn_recurrence(r, n, b)))
    return [_worst("closed_vs_recurrence", items)]


def check_detK_symmetry(ctx: _Context) -> list[Measurement]:
    r, n = ctx.sc.r, ctx.sc.n
    b = ctx.b
    rng = ctx.rng("symmetry")
    a = _pq_params(ctx, rng, ctx.radius(0.6))
    x, y = _points(rng, r, 0.7), _points(rng, r, 0.7)
    base = detK_closed(a.a, x, y, r, n, b)
    items = []
    for _ in range(5):
        perm = rng.permutation(a.m)
        items.append(_compare(str(list(perm)), detK_closed([a.a[i] for i in perm], x, y, r, n, b), base))
    return [_worst("permuted_a", items)]


def check_detK_transition(ctx: _Context) -> list[Measurement]:
    r, n = ctx.sc.r, ctx.sc.n
    b = ctx.b
    rng = ctx.rng("transition")
    a = _pq_params(ctx, rng, ctx.radius(0.6))
    x = ctx.explicit("x", r) or _points(rng, r, 0.7)
    y = ctx.explicit("y", r) or _points(rng, r, 0.7)
    u = ctx.explicit("u", r - 1) or _points(rng, r - 1, 0.6)
    v = ctx.explicit("v", r - 1) or _points(rng, r - 1, 0.6)
    base = list(a.a[:r])
    dKa = detKa_closed(a.a, r, n, b)
    ratio = (transition_to_reference_det_closed(x, base, n, b.p, b.t)
             * transition_to_reference_det_closed(y, base, n, b.q, b.t))
    F = 1.0 + 0j
    for mu in enumerate_compositions(r, n):
        F *= F_mu(base, mu, u, b.p, b.t) * F_mu(base, mu, v, b.q, b.t)
    return [
        _compare("detK_over_detKa", detK_closed(a.a, x, y, r, n, b), dKa * ratio),
        _compare("detI_over_detKa", detI_closed(a.a, u, v, r, n, b), dKa * F),
    ]


# torus integrals

def check_selberg(ctx: _Context) -> list[Measurement]:
    sc = ctx.sc
    if sc.r != 1:
        raise ConfigError(f"{sc.name}: the Selberg check needs r = 1")
    a = _pq_params(ctx, ctx.rng("selberg"), ctx.radius(_symmetric_radius(ctx, 6)))
    res = pair(lambda g: 1.0, lambda g: 1.0, a, ctx.b, sc.policy)
    return [_compare("integral", res.value, selberg_closed(a.a, sc.n, ctx.b), **res.diagnostics())]


def check_detK(ctx: _Context) -> list[Measurement]:
    sc = ctx.sc
    r, n = sc.r, sc.n
    rng = ctx.rng("detK")
    a = _pq_params(ctx, rng, ctx.radius(_symmetric_radius(ctx, 2 * r + 4)))
    x = ctx.explicit("x", r) or _points(rng, r, 0.7)
    y = ctx.explicit("y", r) or _points(rng, r, 0.7)
    res = K_matrix(a, x, y, ctx.b, sc.policy)
    return [_compare("det", np.linalg.det(res.value), detK_closed(a.a, x, y, r, n, ctx.b), **res.diagnostics())]


def _one_balanced_for_psi(ctx: _Context, rng) -> ParamSet:
    """1-balanced a whose pq-companion has |pq a_m| = sqrt|pq|, centred in the Psi region."""
    sc = ctx.sc
    b = ctx.b
    m = 2 * sc.r + 4
    beta_m = np.sqrt(b.p * b.q) * np.exp(1j * rng.uniform(-np.pi, np.pi))
    rho = (abs(b.p * b.q) / abs(b.t) ** (2 * sc.n - 2) / abs(beta_m)) ** (1 / (m - 1))
    free = _points(rng, m - 2, ctx.radius(rho), spread=0.03)
    last = b.p * b.q / (b.t ** (2 * sc.n - 2) * np.prod(free) * beta_m)
    return ParamSet(free + [last, beta_m / (b.p * b.q)], sc.r, sc.n, "one")


def _coboundary_data(ctx: _Context):
    def compute():
        sc = ctx.sc
        b = ctx.b
        s = sc.r + 1
        rng = ctx.rng("coboundary")
        a = _one_balanced_for_psi(ctx, rng)
        check_psi_region(a, b)
        y = _points(rng, sc.r, 0.5)
        Z = enumerate_compositions(s, sc.n)
        lams = enumerate_compositions(s, sc.n - 1)
        policy = sc.policy if sc.policy.offsets is not None else sc.policy.with_offsets(sc.n)

        def evaluate(grid):
            G = basis_on_grid(grid, y, b.q, b.t)[0].reshape(grid.shape)
            psi = psi_on_grid(grid, a, G, b).reshape(-1)
            Es = basis_on_grid(grid, list(a.a[:s]), b.p, b.t)
            parts = [(Es * psi).mean(axis=1)]
            for lam in lams:
                parts.append(np.array([np.mean(coboundary_on_grid(grid, a, lam, b).reshape(-1) * psi)]))
            return np.concatenate(parts)

        res = refine(evaluate, sc.n, policy)
        values = dict(zip(Z, res.value[: len(Z)]))
        nabla = dict(zip(lams, res.value[len(Z):]))
        return a, values, nabla, res

    return ctx.memo("coboundary", compute)


def check_coboundary(ctx: _Context) -> list[Measurement]:
    a, values, nabla, res = _coboundary_data(ctx)
    s = a.r + 1
    direct, expanded = [], []
    for lam, integral in nabla.items():
        terms = []
        for k in range(s):
            target = tuple(x + (1 if i == k else 0) for i, x in enumerate(lam))
            terms.append(C_lambda_k(a, lam, k, ctx.b) * values[target])
        scale = max(sum(abs(x) for x in terms), 1e-300)
        direct.append(Measurement(str(lam), integral, 0j, abs(integral), abs(integral) / scale))
        total = sum(terms)
        expanded.append(Measurement(str(lam), total, 0j, abs(total), abs(total) / scale))
    diag = res.diagnostics()
    return [_worst("nabla_integral", direct, **diag), _worst("nabla_via_C", expanded)]


def check_congruence(ctx: _Context) -> list[Measurement]:
    a, values, _, res = _coboundary_data(ctx)
    items = []
    for mu, value in values.items():
        terms = [S_entry(a, mu, nu, ctx.b) * values[nu] for nu in values if nu[-1] == 0]
        total = sum(terms)
        scale = max(sum(abs(x) for x in terms), abs(value))
        err = abs(value - total)
        items.append(Measurement(str(mu), value, total, err, err / scale))
    return [_worst("reduction", items, **res.diagnostics())]


# difference systems

def check_selberg_shift(ctx: _Context) -> list[Measurement]:
    sc = ctx.sc
    b = ctx.b
    if sc.r != 1:
        raise ConfigError(f"{sc.name}: the scalar difference equation needs r = 1")
    a = _pq_params(ctx, ctx.rng("selberg_shift"), ctx.radius(0.7 if sc.n == 1 else 0.85))
    base = pair(lambda g: 1.0, lambda g: 1.0, a, b, sc.policy)
    out = []
    for k in range(5):
        shifted = a.shift_q_pair(k, b.q)
        res = pair(lambda g: 1.0, lambda g: 1.0, shifted, b, sc.policy)
        out.append(_compare(f"k={k}", res.value, selberg_shift_ratio(a.a, k, sc.n, b) * base.value, N=res.N))
    return out


def _system_data(ctx: _Context):
    def compute():
        sc = ctx.sc
        r = sc.r
        rng = ctx.rng("system")
        a = _pq_params(ctx, rng, ctx.radius(0.8 if sc.n == 1 else 0.87))
        u = ctx.explicit("u", r - 1) or _points(rng, r - 1, 0.6)
        v = ctx.explicit("v", r - 1) or _points(rng, r - 1, 0.6)
        x = ctx.explicit("x", r) or _points(rng, r, ctx.radius(0.8 if sc.n == 1 else 0.87))
        I = I_matrix(a, u, v, ctx.b, sc.policy)
        K = K_matrix(a, x, x, ctx.b, sc.policy)
        return a, u, v, x, I, K

    return ctx.memo("system", compute)


def _shift_indices(a: ParamSet) -> list[int]:
    return sorted({0, a.r - 1, a.r + 1, a.m - 2})


def _shifted_system(ctx: _Context, k: int):
    def compute():
        a, u, v, x, _, _ = _system_data(ctx)
        shifted = a.shift_q_pair(k, ctx.b.q)
        return (I_matrix(shifted, u, v, ctx.b, ctx.sc.policy), K_matrix(shifted, x, x, ctx.b, ctx.sc.policy))

    return ctx.memo(("shifted", k), compute)


def check_shift_I(ctx: _Context) -> list[Measurement]:
    a, u, v, x, I, _ = _system_data(ctx)
    out = []
    for k in _shift_indices(a):
        Is, _ = _shifted_system(ctx, k)
        A = A_rescaled(a, k, u, ctx.b)
        out.append(_compare_matrix(f"k={k}", Is.value, A @ I.value, N=Is.N))
    return out


def check_shift_K(ctx: _Context) -> list[Measurement]:
    a, u, v, x, _, K = _system_data(ctx)
    rng = ctx.rng("shift_K")
    out = []
    for k in _shift_indices(a):
        _, Ks = _shifted_system(ctx, k)
        M = M_matrix(a, k, x, u, ctx.b)
        out.append(_compare_matrix(f"k={k}", Ks.value, M @ K.value, N=Ks.N))
        M_other = M_matrix(a, k, x, _points(rng, a.r - 1, 0.5), ctx.b)
        out.append(_compare_matrix(f"k={k},u_independence", M_other, M))
    return out


def check_j0_ratio(ctx: _Context) -> list[Measurement]:
    a, u, v, _, _, _ = _system_data(ctx)
    b = ctx.b
    r, n = a.r, a.n
    out = []
    J = J0(a.a, u, v, r, n, b)
    for k in _shift_indices(a):
        shifted = a.shift_q_pair(k, b.q)
        out.append(_compare(f"k={k}", J0(shifted.a, u, v, r, n, b) / J, A_rescaled_det_closed(a, k, u, b)))
    return out


def check_detI(ctx: _Context) -> list[Measurement]:
    a, u, v, _, I, _ = _system_data(ctx)
    direct = I_matrix_direct(a, u, v, ctx.b, ctx.sc.policy)
    return [
        _compare("det", np.linalg.det(I.value), detI_closed(a.a, u, v, a.r, a.n, ctx.b), **I.diagnostics()),
        _compare_matrix("routes", direct.value, I.value),
    ]


def check_detA(ctx: _Context) -> list[Measurement]:
    sc = ctx.sc
    b = ctx.b
    rng = ctx.rng("detA")
    out = []
    for k in range(2 * sc.r + 3):
        a = _pq_params(ctx, rng, ctx.radius(0.85))
        A = A_matrix(a, k, b)
        out.append(_compare(f"A,k={k}", np.linalg.det(A), A_det_closed(a, k, b), cond=np.linalg.cond(A)))
        u = ctx.explicit("u", sc.r - 1) or _points(rng, sc.r - 1, 0.7)
        Ar = A_rescaled(a, k, u, b)
        out.append(_compare(f"rescaled,k={k}", np.linalg.det(Ar), A_rescaled_det_closed(a, k, u, b),
                            cond=np.linalg.cond(Ar)))
    return out


def qde_residuals(scenario: Scenario, seed: int = DEFAULT_SEED, tol_scale: float = 1.0) -> list[CheckResult]:
    """Residuals of the scalar, matrix and determinant difference equations for one scenario."""
    names = ["selberg_shift"] if scenario.r == 1 else ["shift_I", "shift_K", "j0_ratio"]
    names.append("detA")
    specs = [CheckSpec(name, DEFAULT_TOLERANCES[name]) for name in names]
    return _run_one(replace(scenario, checks=specs), seed, tol_scale)


# trigonometric limit

def _trig_nomes(ctx: _Context):
    return ctx.b.q, ctx.b.t


def check_askey_wilson(ctx: _Context) -> list[Measurement]:
    q, t = _trig_nomes(ctx)
    a = ctx.explicit("a", 4) or _points(ctx.rng("aw"), 4, ctx.radius(0.5))
    res = integrate(lambda g: sphi_tilde_on_grid(g, a, q, t), ctx.sc.n, ctx.sc.policy)
    return [_compare("integral", res.value, gustafson_AW(a, q, t, ctx.sc.n), **res.diagnostics())]


def _nr_params(ctx: _Context, rng, count: int, rho: float) -> list[complex]:
    q, t = _trig_nomes(ctx)
    explicit = ctx.explicit("a", count)
    if explicit is not None:
        return explicit
    free = _points(rng, count - 1, rho)
    return free + [q / (t ** (2 * ctx.sc.n - 2) * np.prod(free))]


def check_nassrallah_rahman(ctx: _Context) -> list[Measurement]:
    q, t = _trig_nomes(ctx)
    a = _nr_params(ctx, ctx.rng("nr"), 6, ctx.radius(0.55))
    res = integrate(lambda g: sphi_on_grid(g, a, q, t), ctx.sc.n, ctx.sc.policy)
    return [_compare("integral", res.value, gustafson_NR(a, q, t, ctx.sc.n), **res.diagnostics())]


def check_trig_detK(ctx: _Context) -> list[Measurement]:
    sc = ctx.sc
    r, n = sc.r, sc.n
    q, t = _trig_nomes(ctx)
    rng = ctx.rng("trig_detK")
    a = _nr_params(ctx, rng, 2 * r + 4, ctx.radius(0.6))
    x = ctx.explicit("x", r) or _points(rng, r, 0.7)
    y = ctx.explicit("y", r) or _points(rng, r, 0.7)
    K = K_trig_matrix(a, x, y, n, q, t, policy=sc.policy)
    at = _points(rng, 2 * r + 2, ctx.radius(0.6))
    Kt = K_trig_matrix(at, x, y, n, q, t, tilde=True, policy=sc.policy)
    return [
        _compare("det", np.linalg.det(K.value), detK_trig_closed(a, x, y, r, n, q, t), **K.diagnostics()),
        _compare("det_tilde", np.linalg.det(Kt.value), detK_tilde_closed(at, x, y, r, n, q, t)),
    ]


def check_detX(ctx: _Context) -> list[Measurement]:
    sc = ctx.sc
    q, t = _trig_nomes(ctx)
    rng = ctx.rng("detX")
    a = _nr_params(ctx, rng, 2 * sc.r + 4, ctx.radius(0.6))
    y = ctx.explicit("y", sc.r) or _points(rng, sc.r, 0.7)
    X = X_matrix(a, y, sc.n, q, t, policy=sc.policy)
    return [_compare("det", np.linalg.det(X.value), detX_closed(a, y, sc.r, sc.n, q, t), **X.diagnostics())]


def check_schur_det(ctx: _Context) -> list[Measurement]:
    sc = ctx.sc
    t = ctx.b.t
    x = ctx.explicit("x", sc.r) or _points(ctx.rng("schur"), sc.r, ctx.radius(0.9))
    C = schur_transition_matrix(x, t, sc.r, sc.n)
    return [_compare("det", np.linalg.det(C), schur_transition_det(x, t, sc.r, sc.n))]


def check_tiny_p(ctx: _Context) -> list[Measurement]:
    s, n = _interp_size(ctx)
    p, t = ctx.b.p, ctx.b.t
    rng = ctx.rng("tinyp")
    c = _points(rng, s, ctx.radius(0.9), spread=0.3)
    z = _points(rng, n, 1.0, spread=0.1)
    items = [_compare(str(mu), E_eval(c, mu, z, p, t), E_trig(c, mu, z, t))
             for mu in enumerate_compositions(s, n)]
    return [_worst("elliptic_vs_trig", items, p=abs(p))]


CHECKS: dict[str, Callable[[_Context], list[Measurement]]] = {
    "functional_equations": check_functional_equations,
    "kronecker": check_kronecker,
    "interp_identities": check_interp_identities,
    "det_C": check_det_C,
    "det_B": check_det_B,
    "c_rn": check_c_rn,
    "detK_symmetry": check_detK_symmetry,
    "detK_transition": check_detK_transition,
    "selberg": check_selberg,
    "detK": check_detK,
    "coboundary": check_coboundary,
    "congruence": check_congruence,
    "selberg_shift": check_selberg_shift,
    "shift_I": check_shift_I,
    "shift_K": check_shift_K,
    "j0_ratio": check_j0_ratio,
    "detI": check_detI,
    "detA": check_detA,
    "askey_wilson": check_askey_wilson,
    "nassrallah_rahman": check_nassrallah_rahman,
    "trig_detK": check_trig_detK,
    "detX": check_detX,
    "schur_det": check_schur_det,
    "tiny_p": check_tiny_p,
}

DEFAULT_TOLERANCES = {
    "functional_equations": 1e-12,
    "kronecker": 1e-10,
    "interp_identities": 1e-9,
    "det_C": 1e-9,
    "det_B": 1e-9,
    "c_rn": 1e-12,
    "detK_symmetry": 1e-12,
    "detK_transition": 1e-10,
    "selberg": 1e-10,
    "detK": 1e-8,
    "coboundary": 1e-8,
    "congruence": 1e-7,
    "selberg_shift": 1e-9,
    "shift_I": 1e-7,
    "shift_K": 1e-7,
    "j0_ratio": 1e-9,
    "detI": 1e-8,
    "detA": 1e-9,
    "askey_wilson": 1e-10,
    "nassrallah_rahman": 1e-9,
    "trig_detK": 1e-7,
    "detX": 1e-9,
    "schur_det": 1e-9,
    "tiny_p": 1e-4,
}


# built-in suites

def _polar(mod: float, arg: float) -> complex:
    return complex(mod * np.exp(1j * arg))


SCALAR_BASES = Bases(_polar(0.3, 0.4), _polar(0.3, -1.1), _polar(0.6, 0.5))
INTEGRAL_BASES = Bases(_polar(0.25, 0.4), _polar(0.3, -1.1), _polar(0.55, 0.5))
COBOUNDARY_BASES = Bases(_polar(0.05, 0.4), _polar(0.3, -1.1), _polar(0.6, 0.5))
SYSTEM_BASES = Bases(_polar(0.08, 0.3), _polar(0.12, -0.6), _polar(0.6, 0.25))
TRIG_BASES = Bases(0j, _polar(0.3, 0.5), _polar(0.55, -0.4))
TINY_P_BASES = Bases(_polar(1e-6, 0.2), 0j, _polar(0.55, -0.4))


def _sc(name, r, n, bases, checks, criterion, **kw) -> Scenario:
    specs = []
    for item in checks:
        check, tol = (item, DEFAULT_TOLERANCES[item]) if isinstance(item, str) else item
        specs.append(CheckSpec(check, tol))
    return Scenario(name=name, r=r, n=n, bases=bases, checks=specs, criterion=criterion, **kw)


def _identities() -> list[Scenario]:
    out = [_sc("scalar", 1, 1, SCALAR_BASES, ["functional_equations"], 1)]
    for s, n in ((2, 2), (2, 3), (3, 2), (3, 3)):
        out.append(_sc(f"kronecker-s{s}-n{n}", s - 1, n, SCALAR_BASES, ["kronecker"], 2, s=s))
    for s, n in ((2, 2), (2, 3), (3, 2), (3, 3)):
        out.append(_sc(f"interp-s{s}-n{n}", s - 1, n, SCALAR_BASES, ["interp_identities"], 3, s=s))
    for r, n in ((2, 1), (2, 2), (3, 1)):
        out.append(_sc(f"transition-r{r}-n{n}", r, n, SYSTEM_BASES, ["det_C", "det_B"], 4))
    for r, n in ((1, 1), (1, 2), (2, 1), (2, 2)):
        out.append(_sc(f"detA-r{r}-n{n}", r, n, SYSTEM_BASES, ["detA"], 8))
    out.append(_sc("c_rn", 4, 4, INTEGRAL_BASES, ["c_rn"], 9))
    for r, n in ((2, 1), (2, 2), (3, 2)):
        out.append(_sc(f"closed-forms-r{r}-n{n}", r, n, INTEGRAL_BASES, ["detK_symmetry", "detK_transition"], None))
    return out


def _integrals() -> list[Scenario]:
    out = [
        _sc("selberg-n1", 1, 1, INTEGRAL_BASES, ["selberg"], 5),
        _sc("selberg-n2", 1, 2, INTEGRAL_BASES, [("selberg", 1e-7)], 5),
    ]
    for r, n in ((1, 1), (2, 1), (1, 2), (2, 2)):
        checks = ["coboundary" if n == 1 else ("coboundary", 1e-6)]
        if (r, n) == (1, 2):
            checks.append("congruence")
        out.append(_sc(f"coboundary-r{r}-n{n}", r, n, COBOUNDARY_BASES, checks, 6))
    for r, n in ((1, 1), (1, 2), (2, 1)):
        out.append(_sc(f"detK-r{r}-n{n}", r, n, INTEGRAL_BASES, ["detK"], 7))
    out.append(_sc("detK-r2-n2", 2, 2, INTEGRAL_BASES, [("detK", 1e-6)], 7))
    for n in (1, 2):
        out.append(_sc(f"selberg-shift-n{n}", 1, n, SYSTEM_BASES, ["selberg_shift"], 8))
    out.append(_sc("system-r2-n1", 2, 1, SYSTEM_BASES, ["shift_I", "shift_K", "j0_ratio", "detI"], 8))
    out.append(_sc("system-r2-n2", 2, 2, SYSTEM_BASES,
                   [("shift_I", 1e-5), ("shift_K", 1e-5), "j0_ratio", ("detI", 1e-6)], 8))
    return out


def _trig() -> list[Scenario]:
    out = [
        _sc("askey-wilson-n1", 1, 1, TRIG_BASES, ["askey_wilson"], 10),
        _sc("nassrallah-rahman-n1", 1, 1, TRIG_BASES, ["nassrallah_rahman"], 10),
        _sc("nassrallah-rahman-n2", 1, 2, TRIG_BASES, [("nassrallah_rahman", 1e-7)], 10),
        _sc("trig-det-r2-n1", 2, 1, TRIG_BASES, ["trig_detK", "detX"], 10),
    ]
    for r, n in ((2, 2), (3, 2), (2, 3), (3, 3)):
        out.append(_sc(f"schur-r{r}-n{n}", r, n, TRIG_BASES, ["schur_det"], 10))
    out.append(_sc("tiny-p", 2, 3, TINY_P_BASES, ["tiny_p"], 10, s=3))
    return out


def _optional() -> list[Scenario]:
    # a larger |t| keeps the symmetric moduli near 0.82 at n = 3
    bases = Bases(INTEGRAL_BASES.p, INTEGRAL_BASES.q, _polar(0.7, 0.5))
    return [_sc("selberg-n3", 1, 3, bases, [("selberg", 1e-4)], 5, optional=True,
                policy=QuadPolicy(N0=32, N_max=128, tol=1e-3))]


SUITES: dict[str, Callable[[], list[Scenario]]] = {
    "identities": _identities,
    "trig": _trig,
    "paper-core": lambda: _identities() + _integrals() + _trig(),
}


def suite(name: str, include_optional: bool = False) -> list[Scenario]:
    """Scenarios of a built-in suite; ``include_optional`` adds the n = 3 Selberg check."""
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    out = SUITES[name]()
    if include_optional and name == "paper-core":
        out += _optional()
    return out


# running

def _run_one(sc: Scenario, seed: int, tol_scale: float) -> list[CheckResult]:
    seed = sc.seed if sc.seed is not None else seed
    ctx = _Context(sc, seed)
    out = []
    for spec in sc.checks:
        tol = spec.tol * tol_scale
        start = time.perf_counter()
        try:
            measurements = CHECKS[spec.name](ctx)
        except (EllipError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out.append(CheckResult(sc.name, spec.name, "", tol, None, None, None, None, False,
                                   time.perf_counter() - start, {}, f"{type(exc).__name__}: {exc}",
                                   sc.criterion))
            continue
        seconds = time.perf_counter() - start
        for m in measurements:
            finite = math.isfinite(m.rel_residual) and math.isfinite(m.abs_residual)
            out.append(CheckResult(sc.name, spec.name, m.label, tol, m.computed, m.reference,
                                   m.abs_residual, m.rel_residual, finite and m.rel_residual <= tol,
                                   seconds / len(measurements), m.diagnostics,
                                   None if finite else "non-finite residual", sc.criterion))
    return out


def _scenario_summary(sc: Scenario, seed: int) -> dict:
    return {
        "name": sc.name,
        "r": sc.r,
        "n": sc.n,
        "s": sc.s,
        "criterion": sc.criterion,
        "seed": sc.seed if sc.seed is not None else seed,
        "bases": {"p": sc.bases.p, "q": sc.bases.q, "t": sc.bases.t},
        "checks": [{"name": c.name, "tol": c.tol} for c in sc.checks],
        "regime": sc.regime(),
    }


def run_scenarios(scenarios: Sequence[Scenario], seed: int = DEFAULT_SEED, threads: int = 1,
                  tol_scale: float = 1.0) -> Report:
    """Run every scenario (in parallel across scenarios) and assemble the report in input order."""
    scenarios = list(scenarios)
    for sc in scenarios:
        sc.validate()
    if threads > 1 and len(scenarios) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda sc: _run_one(sc, seed, tol_scale), scenarios))
    else:
        chunks = [_run_one(sc, seed, tol_scale) for sc in scenarios]
    results = list(itertools.chain.from_iterable(chunks))
    return Report(seed, tol_scale, [_scenario_summary(sc, seed) for sc in scenarios], results)


# configuration files

_SCENARIO_KEYS = {
    "name", "r", "n", "s", "bases", "checks", "seed", "radius", "cases", "balancing", "policy",
    "a", "x", "y", "u", "v", "criterion", "optional",
}
_TOP_KEYS = {"seed", "tol_scale", "scenario"}


def _parse_complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a complex number, got a boolean")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            raise ConfigError(f"{where}: cannot parse {value!r} as a complex number") from None
    if isinstance(value, dict):
        if set(value) == {"mod", "arg"}:
            return _polar(float(value["mod"]), float(value["arg"]))
        if set(value) <= {"re", "im"}:
            return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    raise ConfigError(f"{where}: expected a number, a string like '0.1-0.2j' or a table {{mod, arg}}")


def _parse_int(value, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{where}: expected an integer >= {minimum}, got {value!r}")
    return value


def _parse_scenario(raw: dict, index: int) -> Scenario:
    where = f"scenario[{index}]"
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a table")
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown field")
    for key in ("name", "r", "n", "bases", "checks"):
        if key not in raw:
            raise ConfigError(f"{where}.{key}: missing required field")
    name = raw["name"]
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{where}.name: expected a non-empty string")
    r = _parse_int(raw["r"], f"{where}.r", 1)
    n = _parse_int(raw["n"], f"{where}.n", 0)

    bases_raw = raw["bases"]
    if not isinstance(bases_raw, dict) or set(bases_raw) != {"p", "q", "t"}:
        raise ConfigError(f"{where}.bases: expected a table with exactly p, q and t")
    nomes = {k: _parse_complex(v, f"{where}.bases.{k}") for k, v in bases_raw.items()}
    try:
        bases = Bases(**nomes)
    except ValueError as exc:
        raise ConfigError(f"{where}.bases: {exc}") from None

    checks_raw = raw["checks"]
    if not isinstance(checks_raw, list):
        raise ConfigError(f"{where}.checks: expected a list")
    checks = []
    for j, item in enumerate(checks_raw):
        spot = f"{where}.checks[{j}]"
        if isinstance(item, str):
            item = {"name": item}
        if not isinstance(item, dict) or "name" not in item or set(item) - {"name", "tol"}:
            raise ConfigError(f"{spot}: expected a check name or a table {{name, tol}}")
        if item["name"] not in CHECKS:
            raise ConfigError(f"{spot}.name: unknown check {item['name']!r}")
        tol = item.get("tol", DEFAULT_TOLERANCES[item["name"]])
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
            raise ConfigError(f"{spot}.tol: expected a positive number")
        checks.append(CheckSpec(item["name"], float(tol)))

    kwargs = {}
    for key in ("a", "x", "y", "u", "v"):
        if key in raw:
            if not isinstance(raw[key], list):
                raise ConfigError(f"{where}.{key}: expected a list of complex numbers")
            kwargs[key] = tuple(_parse_complex(val, f"{where}.{key}[{j}]") for j, val in enumerate(raw[key]))
    if "s" in raw:
        kwargs["s"] = _parse_int(raw["s"], f"{where}.s", 1)
    if "seed" in raw:
        kwargs["seed"] = _parse_int(raw["seed"], f"{where}.seed")
    if "cases" in raw:
        kwargs["cases"] = _parse_int(raw["cases"], f"{where}.cases", 1)
    if "criterion" in raw:
        kwargs["criterion"] = _parse_int(raw["criterion"], f"{where}.criterion", 1)
    if "optional" in raw:
        if not isinstance(raw["optional"], bool):
            raise ConfigError(f"{where}.optional: expected true or false")
        kwargs["optional"] = raw["optional"]
    if "radius" in raw:
        radius = raw["radius"]
        if isinstance(radius, bool) or not isinstance(radius, (int, float)) or not 0 < radius < 1:
            raise ConfigError(f"{where}.radius: expected a number in (0, 1)")
        kwargs["radius"] = float(radius)
    if "balancing" in raw:
        if raw["balancing"] not in ("pq", "one", "q_only", "none"):
            raise ConfigError(f"{where}.balancing: expected one of pq, one, q_only, none")
        kwargs["balancing"] = raw["balancing"]
    if "policy" in raw:
        pol = raw["policy"]
        if not isinstance(pol, dict) or set(pol) - {"N0", "N_max", "tol"}:
            raise ConfigError(f"{where}.policy: expected a table with N0, N_max, tol")
        kwargs["policy"] = QuadPolicy(
            N0=_parse_int(pol.get("N0", 32), f"{where}.policy.N0", 2),
            N_max=_parse_int(pol["N_max"], f"{where}.policy.N_max", 2) if "N_max" in pol else None,
            tol=float(pol["tol"]) if "tol" in pol else None,
        )
    return Scenario(name=name, r=r, n=n, bases=bases, checks=checks, **kwargs)


def parse_config(text: str, source: str = "<config>") -> tuple[list[Scenario], int | None, float]:
    """Parse TOML text into (scenarios, seed or None, tol_scale)."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{source}: {sorted(unknown)[0]}: unknown top-level field")
    seed = _parse_int(raw["seed"], "seed") if "seed" in raw else None
    tol_scale = raw.get("tol_scale", 1.0)
    if isinstance(tol_scale, bool) or not isinstance(tol_scale, (int, float)) or not tol_scale > 0:
        raise ConfigError("tol_scale: expected a positive number")
    entries = raw.get("scenario", [])
    if not isinstance(entries, list):
        raise ConfigError("scenario: expected an array of tables ([[scenario]])")
    scenarios = [_parse_scenario(entry, i) for i, entry in enumerate(entries)]
    names = [sc.name for sc in scenarios]
    for i, name in enumerate(names):
        if name in names[:i]:
            raise ConfigError(f"scenario[{i}].name: duplicate name {name!r}")
    return scenarios, seed, float(tol_scale)


def load_config(path: str | Path) -> tuple[list[Scenario], int | None, float]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def run(config: str | Path, seed: int | None = None, threads: int = 1, tol_scale: float | None = None) -> Report:
    """Load a config file and run it; explicit arguments override the file's seed and tol_scale."""
    scenarios, file_seed, file_scale = load_config(config)
    seed = seed if seed is not None else (file_seed if file_seed is not None else DEFAULT_SEED)
    return run_scenarios(scenarios, seed, threads, tol_scale if tol_scale is not None else file_scale)
