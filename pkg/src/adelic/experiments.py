"""Experiment runners: each is a pure function of its :class:`ExperimentConfig`.

Every runner returns a list of :class:`ResultRow`. Rows with a tolerance are
audits; the CLI exits nonzero when any audit fails.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .arith import PAdicApprox, RationalScalar
from .characters import (
    LocalUnitCharacter,
    ProductCharacter,
    character_to_cylinder,
    enumerate_characters,
    eval_at_point,
    parse_character,
)
from .measure import (
    BetaMeasure,
    CylinderFunction,
    CylinderSet,
    LocalCell,
    adjoint_shift,
    check_scaling_law,
    cylinder_measure,
    inner_product,
    mu_W_tail_bound,
    mu_W_truncated,
    random_cylinder,
    sample_batch,
    scale_set,
    zeta_reference,
)
from .certified import UNIT_ROUNDOFF
from .primes import SIEVE_CAP, is_prime, iter_semigroup, primes_upto
from .projection import ProjectionRequest, product_scan, project_character, project_function, twisted_product_scan

EXPERIMENTS = ("phase-scan", "mu-w", "basis-audit", "mc-validate", "scaling-audit", "project")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    betas: tuple[float, ...] = (1.0,)
    chis: tuple[str, ...] = ("2^2:1",)
    x_max: int = 10**6
    n: int = 100_000
    seed: int = 0
    eps: float = 1e-12
    out: str | None = None
    t: float = 0.0
    events: int = 20
    pairs: int = 500
    primes: tuple[int, ...] = (2, 3)
    levels: tuple[int, ...] = (2, 1)
    n_max: int = 6
    A: tuple[int, ...] = (3,)
    x: str = ""
    function: str | None = None
    shuffle_order: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.betas or any(not b > 0 for b in self.betas):
            raise ConfigError("beta grid values must be > 0")
        if self.n < 1:
            raise ConfigError("sample count N must be >= 1")
        if self.x_max < 2:
            raise ConfigError("x_max must be >= 2")
        if self.x_max > SIEVE_CAP:
            raise ConfigError(f"x_max {self.x_max} exceeds the sieve cap {SIEVE_CAP}")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if len(set(self.primes)) != len(self.primes) or not all(is_prime(p) for p in self.primes):
            raise ConfigError("primes must be distinct primes")
        if len(self.primes) != len(self.levels) or any(m < 1 for m in self.levels):
            raise ConfigError("need one level >= 1 per prime")
        for spec in self.chis:
            try:
                parse_character(spec)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    @property
    def characters(self) -> list[ProductCharacter]:
        return [parse_character(s) for s in self.chis]

    @property
    def checkpoints(self) -> list[int]:
        out = [10**k for k in range(2, 8) if 10**k <= self.x_max]
        if not out or out[-1] != self.x_max:
            out.append(self.x_max)
        return out


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    params: dict
    quantity: str
    value: float
    error: float = 0.0
    tolerance: str = ""
    passed: bool | None = None
    wall_time: float = field(default=0.0, compare=False)

    def as_dict(self, timing: bool = False) -> dict:
        d = {
            "experiment": self.experiment,
            "params": ";".join(f"{k}={v}" for k, v in self.params.items()),
            "quantity": self.quantity,
            "value": _fmt(self.value),
            "error": _fmt(self.error),
            "tolerance": self.tolerance,
            "passed": "" if self.passed is None else ("pass" if self.passed else "fail"),
        }
        if timing:
            d["wall_time"] = f"{self.wall_time:.3f}"
        return d


def _fmt(x: float) -> str:
    return repr(float(x))


COLUMNS = ["experiment", "params", "quantity", "value", "error", "tolerance", "passed"]


def to_csv(rows: Sequence[ResultRow], timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS + (["wall_time"] if timing else []), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.as_dict(timing))
    return buf.getvalue()


def to_json(rows: Sequence[ResultRow], timing: bool = False) -> str:
    return json.dumps([r.as_dict(timing) for r in rows], indent=1) + "\n"


def failed(rows: Sequence[ResultRow]) -> list[ResultRow]:
    return [r for r in rows if r.passed is False]


# ---------------------------------------------------------------- runners


def run_phase_scan(cfg: ExperimentConfig) -> list[ResultRow]:
    """Character amplitudes at the checkpoints, for every beta and character.

    beta <= 1 with a non-principal twist: decay witness ``|a(x_max)| < 0.5 |a(100)|``.
    beta > 1: Cauchy check ``|a(x_max) - a(x_max/100)|`` within the certified tail.
    """
    rows = []
    for beta in sorted(cfg.betas):
        for spec, chi in zip(cfg.chis, cfg.characters):
            t0 = time.perf_counter()
            scan = twisted_product_scan(beta, cfg.t, chi, cfg.x_max)
            par = {"beta": beta, "t": cfg.t, "chi": spec}
            for x in cfg.checkpoints:
                k = scan.index_at(x) + 1
                val = abs(scan.at(x))
                rows.append(ResultRow("phase-scan", {**par, "x": x}, "amplitude", val, 8 * UNIT_ROUNDOFF * (k + 2) * val))
            principal = chi.is_trivial and not chi.support and cfg.t == 0
            last, first = abs(scan.at(cfg.x_max)), abs(scan.at(100))
            if principal:
                ok = all(abs(scan.at(x)) == 1.0 for x in cfg.checkpoints)
                rows.append(ResultRow("phase-scan", par, "all_checkpoints_one", float(ok), 0.0, "exact", ok))
            elif beta <= 1 and cfg.x_max > 100:
                ratio = last / first
                rows.append(ResultRow("phase-scan", par, "decay_ratio", ratio, 8 * UNIT_ROUNDOFF * len(scan.primes) * ratio, "<0.5", ratio < 0.5))
            elif beta > 1 and cfg.x_max >= 200:
                x0 = cfg.x_max // 100
                gap = abs(scan.at(cfg.x_max) - scan.at(x0))
                bound = scan.bound_at(x0)
                rows.append(ResultRow("phase-scan", {**par, "x0": x0}, "cauchy_gap", gap, bound, "<=tail_bound", gap <= bound + 1e-12))
            if cfg.shuffle_order:
                rng = np.random.default_rng(cfg.seed)
                shuffled = product_scan(rng.permutation(scan.primes), beta, cfg.t, chi)
                a, b = complex(shuffled.values[-1]), complex(scan.values[-1])
                diff = abs(a - b)
                tol = 1e-9 * max(1.0, abs(b))
                rows.append(ResultRow("phase-scan", par, "shuffled_order_final_diff", diff, 0.0, f"<={tol:.3g}", diff <= tol))
            rows[-1] = replace(rows[-1], wall_time=time.perf_counter() - t0)
    return rows


def run_mu_w_scan(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for beta in sorted(cfg.betas):
        t0 = time.perf_counter()
        par = {"beta": beta}
        vals = []
        for x in cfg.checkpoints:
            v = mu_W_truncated(beta, x)
            vals.append(v)
            k = len(primes_upto(x))
            rows.append(ResultRow("mu-w", {**par, "x": x}, "mu_W_truncated", v, 8 * UNIT_ROUNDOFF * (k + 2) * v))
        if beta > 1:
            target = 1 / zeta_reference(beta)
            v = vals[-1]
            bound = v * mu_W_tail_bound(beta, cfg.x_max) + 1e-12
            rows.append(ResultRow("mu-w", par, "inv_zeta_reference", target, 1e-14))
            diff = abs(v - target)
            rows.append(ResultRow("mu-w", {**par, "x": cfg.x_max}, "abs_diff_to_inv_zeta", diff, bound, "<=tail_bound", diff <= bound))
        else:
            ok = all(b < a for a, b in zip(vals, vals[1:]))
            rows.append(ResultRow("mu-w", par, "strictly_decreasing", float(ok), 0.0, "exact", ok))
        rows[-1] = replace(rows[-1], wall_time=time.perf_counter() - t0)
    return rows


def basis_index(B: Sequence[int], levels: Sequence[int], n_max: int) -> list[tuple[int, ProductCharacter]]:
    """``(n, chi)`` for n in N_B up to n_max and every character at the given levels."""
    chars = enumerate_characters(B, dict(zip(B, levels)))
    return [(n, chi) for n, _ in iter_semigroup(B, limit=n_max) for chi in chars]


def basis_functions(mu: BetaMeasure, B: Sequence[int], levels: Sequence[int], n_max: int):
    """``[(n, chi, V_n^* chi)]`` as explicit cylinder functions."""
    return [(n, chi, adjoint_shift(mu, character_to_cylinder(chi), n)) for n, chi in basis_index(B, levels, n_max)]


def gram_matrix(mu: BetaMeasure, funcs: Sequence[CylinderFunction]) -> np.ndarray:
    """Pairwise inner products by cylinder integration (quadratic in the term count)."""
    k = len(funcs)
    G = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(i, k):
            G[i, j] = inner_product(mu, funcs[i], funcs[j])
            G[j, i] = G[i, j].conjugate()
    return G


def _local_shifted(mu: BetaMeasure, chi_p: LocalUnitCharacter, n: int) -> CylinderFunction:
    """The factor at p of ``V_n^* chi``, without the n^beta constant.

    Every prime of n lies in B, so the constraints that scaling puts at the
    other primes are implied by their own factors and can be dropped.
    """
    p = chi_p.p
    f = character_to_cylinder(ProductCharacter((chi_p,)))
    inv = RationalScalar(1, n)
    return f.map_sets(lambda X: CylinderSet({p: scale_set(X, inv).cells(p)}))


def factorized_gram(mu: BetaMeasure, basis: Sequence[tuple[int, ProductCharacter]]) -> np.ndarray:
    """Gram matrix of ``V_n^* chi`` using the product structure of mu.

    Each basis function is ``n^beta`` times a product of one-prime factors, so
    every entry is ``n^beta n'^beta`` times a product of local inner products.
    """
    primes = basis[0][1].support if basis else ()
    scale = np.array([n**mu.beta for n, _ in basis])
    G = np.outer(scale, scale).astype(complex)
    for k, p in enumerate(primes):
        keys = [(chi.locals[k], n) for n, chi in basis]
        uniq = list(dict.fromkeys(keys))
        pos = {key: i for i, key in enumerate(uniq)}
        local = [_local_shifted(mu, c, n) for c, n in uniq]
        L = np.array([[inner_product(mu, a, b) for b in local] for a in local])
        idx = np.array([pos[key] for key in keys])
        G *= L[np.ix_(idx, idx)]
    return G


def run_basis_audit(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    B = cfg.primes
    for beta in sorted(cfg.betas):
        t0 = time.perf_counter()
        mu = BetaMeasure(beta)
        basis = basis_index(B, cfg.levels, cfg.n_max)
        G = factorized_gram(mu, basis)
        unit_mass = math.prod(mu.shell_factor(p) for p in B)
        expected = np.array([n**beta * unit_mass for n, _ in basis])
        off = G - np.diag(np.diag(G))
        off_max = float(np.max(np.abs(off))) if len(basis) > 1 else 0.0
        rel = float(np.max(np.abs(np.diag(G) - expected) / expected))
        par = {"beta": beta, "B": ",".join(map(str, B)), "levels": ",".join(map(str, cfg.levels)), "n_max": cfg.n_max}
        rows.append(ResultRow("basis-audit", par, "basis_size", len(basis)))
        rows.append(ResultRow("basis-audit", par, "offdiag_max", off_max, 0.0, "<1e-10", off_max < 1e-10))
        rows.append(ResultRow("basis-audit", par, "diag_rel_err_max", rel, 0.0, "<1e-10", rel < 1e-10, time.perf_counter() - t0))
    return rows


def mc_events(seed: int, count: int, levels: dict[int, int]) -> list[CylinderSet]:
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        X = random_cylinder(rng, levels, max_shell=2, max_level=levels)
        if X.constraints:
            out.append(X)
    return out


MC_LEVELS = {2: 2, 3: 1, 5: 1}


def run_mc_validation(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for beta in sorted(cfg.betas):
        t0 = time.perf_counter()
        mu = BetaMeasure(beta)
        batch = sample_batch(mu, MC_LEVELS, cfg.n, cfg.seed)
        par = {"beta": beta, "N": cfg.n, "seed": cfg.seed}
        full = float(batch.indicator(CylinderSet()).mean())
        rows.append(ResultRow("mc-validate", par, "frequency_of_R", full, 0.0, "==1", full == 1.0))
        within = 0
        for i, X in enumerate(mc_events(cfg.seed, cfg.events, MC_LEVELS)):
            exact = cylinder_measure(mu, X)
            freq = float(batch.indicator(X).mean())
            three_sigma = 3 * math.sqrt(exact * (1 - exact) / cfg.n)
            within += abs(freq - exact) <= three_sigma
            rows.append(ResultRow("mc-validate", {**par, "event": i, "exact": repr(exact)}, "frequency", freq, three_sigma))
        need = math.ceil(0.95 * cfg.events)
        rows.append(ResultRow("mc-validate", par, "within_3sigma", within, 0.0, f">={need}", within >= need, time.perf_counter() - t0))
    return rows


SCALING_PRIMES = (2, 3, 5, 7, 11)


def scaling_pairs(seed: int, count: int) -> list[tuple[CylinderSet, RationalScalar]]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        X = random_cylinder(rng, SCALING_PRIMES)
        q = RationalScalar.of(Fraction(rng.randint(1, 100), rng.randint(1, 100)))
        out.append((X, q))
    return out


def run_scaling_audit(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    pairs = scaling_pairs(cfg.seed, cfg.pairs)
    probe = CylinderSet({2: (LocalCell.shell(2, 0, 2, 1),), 3: (LocalCell.shell(3, 1, 1, 2),), 5: (LocalCell.tail_from(5, 1),)})
    for beta in sorted(cfg.betas):
        t0 = time.perf_counter()
        mu = BetaMeasure(beta)
        par = {"beta": beta, "pairs": cfg.pairs, "seed": cfg.seed}
        worst = max(check_scaling_law(mu, X, q)[2] for X, q in pairs)
        ident = max(check_scaling_law(mu, X, 1)[2] for X, _ in pairs)
        _, _, d65 = check_scaling_law(mu, probe, Fraction(6, 5))
        rows.append(ResultRow("scaling-audit", par, "identity_discrepancy", ident, 0.0, "==0", ident == 0))
        rows.append(ResultRow("scaling-audit", {**par, "q": "6/5"}, "probe_discrepancy", d65, 0.0, "<1e-12", d65 < 1e-12))
        rows.append(ResultRow("scaling-audit", par, "max_discrepancy", worst, 0.0, "<1e-10", worst < 1e-10, time.perf_counter() - t0))
    return rows


def parse_point(text: str, default_primes: Sequence[int] = (), levels: dict[int, int] | None = None) -> dict[int, PAdicApprox]:
    """``"2=3,3=1"`` -> units 3 mod 2^m and 1 mod 3^m. ``p=u/m`` sets the level explicitly.

    Primes in ``default_primes`` that are not listed get the unit 1.
    """
    levels = levels or {}
    point = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        try:
            p_s, rest = part.split("=")
            p = int(p_s)
            if "/" in rest:
                u_s, m_s = rest.split("/")
                u, m = int(u_s), int(m_s)
            else:
                u, m = int(rest), levels.get(p, 1)
        except ValueError:
            raise ConfigError(f"bad point component {part!r}") from None
        point[p] = PAdicApprox.unit(p, u, m)
    for p in default_primes:
        point.setdefault(p, PAdicApprox.unit(p, 1, levels.get(p, 1)))
    return point


def run_project(cfg: ExperimentConfig) -> list[ResultRow]:
    rows = []
    if cfg.function:
        with open(cfg.function) as fp:
            f = CylinderFunction.from_json(json.load(fp))
        chi = None
        levels = {q: max(c.m for c in f.cells_at(q)) or 1 for q in f.support}
    else:
        chi = cfg.characters[0]
        f = character_to_cylinder(chi)
        levels = chi.levels
    x = parse_point(cfg.x, sorted(set(cfg.A) | set(f.support)), levels)
    for beta in sorted(cfg.betas):
        t0 = time.perf_counter()
        req = ProjectionRequest(tuple(cfg.A), beta, cfg.t, eps=cfg.eps)
        cv = project_function(req, f, x)
        par = {"beta": beta, "t": cfg.t, "A": ",".join(map(str, req.A)), "x": ",".join(f"{p}={x[p].u}" for p in sorted(x))}
        if chi is not None:
            par["chi"] = str(chi)
        rows.append(ResultRow("project", par, "value_re", cv.value.real, cv.error_bound))
        rows.append(ResultRow("project", par, "value_im", cv.value.imag, cv.error_bound))
        if chi is not None:
            closed = project_character(req.A, beta, cfg.t, chi) * eval_at_point(chi, x)
            diff = abs(cv.value - closed)
            rows.append(ResultRow("project", par, "closed_form_abs", abs(closed), 0.0))
            rows.append(ResultRow("project", par, "engine_discrepancy", diff, cv.error_bound, "<=certified", diff <= cv.error_bound + 1e-13, time.perf_counter() - t0))
    return rows


RUNNERS = {
    "phase-scan": run_phase_scan,
    "mu-w": run_mu_w_scan,
    "basis-audit": run_basis_audit,
    "mc-validate": run_mc_validation,
    "scaling-audit": run_scaling_audit,
    "project": run_project,
}


def run(cfg: ExperimentConfig) -> list[ResultRow]:
    return RUNNERS[cfg.experiment](cfg)
