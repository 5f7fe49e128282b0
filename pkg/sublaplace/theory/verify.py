""" Brute-force checks of the IPV ordering results on small instances """

import json
import logging
import pathlib
import numpy as np
from collections.abc import Callable, Iterable
from dataclasses import dataclass, asdict, field

from .ipv import ClassificationIpvInstance, IpvInstance, ipv, ipv_classification, all_subsets
from .instances import is_epsilon_dominant, ratio_conditions
from ..select.selectors import GradientSummary, select_gradient_laplace, top_k_indices, bottom_k_indices

MAX_ENUMERATION_P = 12
DEFAULT_TOLERANCE = 1e-10
IDENTITY_TOLERANCE = 1e-8

IpvFn = Callable[[IpvInstance, Iterable[int]], float]


class PreconditionError(ValueError):
    "Instance does not satisfy the hypotheses of the check"


@dataclass
class TheoremReport:
    theorem: str
    instance_seed: int | None
    p: int
    passed: bool = True
    worst_margin: float = float("inf")
    n_checked: int = 0
    violation: dict | None = None
    details: dict = field(default_factory=dict)

    def record(self, margin: float, tolerance: float, violation: dict) -> None:
        self.n_checked += 1
        if margin < self.worst_margin:
            self.worst_margin = margin
        if margin < -tolerance and self.passed:
            self.passed = False
            self.violation = violation
            logging.error(f"{self.theorem} falsified on instance {self.instance_seed}: {violation}")


def _mask_to_subset(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def _check_constant_prior(instance: IpvInstance) -> None:
    if not np.allclose(instance.prior_diag, instance.prior_diag[0], rtol=0, atol=1e-12):
        raise PreconditionError("check requires V = cI")


def _check_size(instance: IpvInstance, max_p: int) -> None:
    if instance.p > max_p:
        raise PreconditionError(f"exhaustive enumeration capped at p={max_p}, got p={instance.p}")


def _nested_monotonicity(
    theorem: str, seed: int | None, p: int, value_fn: Callable[[tuple[int, ...]], float], tolerance: float
) -> TheoremReport:
    """Walks every nonempty subset (as a bitmask) and every proper nonempty submask of it"""
    values = {mask: value_fn(_mask_to_subset(mask)) for mask in range(1, 1 << p)}
    full = values[(1 << p) - 1]
    report = TheoremReport(theorem, seed, p, details={"ipv_full": full})
    for outer, outer_value in values.items():
        sub = (outer - 1) & outer
        while sub:
            margin = outer_value - values[sub]
            report.record(margin, tolerance, {"S": _mask_to_subset(sub), "S_prime": _mask_to_subset(outer), "margin": margin})
            sub = (sub - 1) & outer
    # a nested counterexample takes precedence over a range violation
    for outer, outer_value in values.items():
        if outer_value < -tolerance or outer_value > full + tolerance:
            report.record(
                min(outer_value, full - outer_value),
                tolerance,
                {"subset": _mask_to_subset(outer), "ipv": outer_value, "ipv_full": full},
            )
    return report


def verify_theorem1(
    instance: IpvInstance, max_p: int = 10, ipv_fn: IpvFn = ipv, tolerance: float = DEFAULT_TOLERANCE
) -> TheoremReport:
    """IPV(S) <= IPV(S') for every nested pair S within S' over the power set without the empty set"""
    _check_size(instance, max_p)
    return _nested_monotonicity("theorem1", instance.seed, instance.p, lambda S: ipv_fn(instance, S), tolerance)


def verify_classification_monotonicity(
    instance: ClassificationIpvInstance,
    max_p: int = 10,
    ipv_fn: Callable[[ClassificationIpvInstance, Iterable[int]], float] = ipv_classification,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int | None = None,
) -> TheoremReport:
    """Nested-subset monotonicity of the classification IPV; holds when the cross moment is the canonical one"""
    _check_size(instance, max_p)
    return _nested_monotonicity("classification", seed, instance.p, lambda S: ipv_fn(instance, S), tolerance)


def shrinkage_ipv(instance: IpvInstance, S: Iterable[int]) -> float:
    """IPV(S) through (A + cI)^-1 A = I - c(A + cI)^-1 with A = Lambda_SS and c = (sigma^2 / N) v, for a constant prior v"""
    idx = np.asarray(sorted(int(i) for i in S), dtype=np.intp)
    A = instance.Lambda[np.ix_(idx, idx)]
    c = instance.scale * float(instance.prior_diag[0])
    return instance.scale * (idx.shape[0] - c * float(np.trace(np.linalg.inv(A + c * np.eye(idx.shape[0])))))


def _check_shrinkage_identity(report: TheoremReport, instance: IpvInstance, S: tuple[int, ...], value: float) -> None:
    expected = shrinkage_ipv(instance, S)
    gap = abs(value - expected) / max(abs(expected), np.finfo(np.float64).tiny)
    report.details["shrinkage_identity_gap"] = gap
    if gap > IDENTITY_TOLERANCE and report.passed:
        report.passed = False
        report.violation = {"S": S, "ipv": value, "shrinkage_ipv": expected}
        logging.error(f"{report.theorem} IPV of {S} disagrees with its shrinkage form by {gap:.3g} on instance {report.instance_seed}")


def _is_permutation_invariant_plus_diagonal(Lambda: np.ndarray) -> bool:
    off = Lambda[~np.eye(Lambda.shape[0], dtype=bool)]
    return bool(np.allclose(off, off[0], rtol=0, atol=1e-12))


def verify_theorem2(
    instance: IpvInstance, k: int, ipv_fn: IpvFn = ipv, tolerance: float = DEFAULT_TOLERANCE
) -> TheoremReport:
    """Top-k diagonal subset attains max IPV and bottom-k diagonal subset attains min IPV among size-k subsets"""
    _check_size(instance, MAX_ENUMERATION_P)
    _check_constant_prior(instance)
    if not _is_permutation_invariant_plus_diagonal(instance.Lambda):
        raise PreconditionError("Lambda is not diagonal plus a permutation-invariant matrix")
    diag = np.diag(instance.Lambda)
    top = tuple(int(i) for i in top_k_indices(diag, k))
    bottom = tuple(int(i) for i in bottom_k_indices(diag, k))
    values = {S: ipv_fn(instance, S) for S in all_subsets(instance.p, k)}
    best, worst = max(values.values()), min(values.values())
    report = TheoremReport("theorem2", instance.seed, instance.p, details={"k": k, "top": top, "bottom": bottom})
    report.record(values[top] - best, tolerance, {"top": top, "ipv_top": values[top], "max_ipv": best})
    report.record(worst - values[bottom], tolerance, {"bottom": bottom, "ipv_bottom": values[bottom], "min_ipv": worst})
    report.n_checked = len(values)
    _check_shrinkage_identity(report, instance, top, values[top])
    return report


def verify_theorem3(
    instance: IpvInstance, k: int, epsilon: float, ipv_fn: IpvFn = ipv, tolerance: float = DEFAULT_TOLERANCE
) -> TheoremReport:
    """Dis(top-k) <= Dis(bottom-k), and under the strong ratio condition Dis(top-k) <= Dis(S) for every size-k S disjoint from top-k"""
    _check_size(instance, MAX_ENUMERATION_P)
    _check_constant_prior(instance)
    if not is_epsilon_dominant(instance.Lambda, epsilon):
        raise PreconditionError(f"Lambda is not {epsilon}-diagonally dominant")
    bottom_ok, strong = ratio_conditions(instance.Lambda, epsilon, k)
    if not bottom_ok:
        raise PreconditionError(f"diagonal ratio condition fails at k={k}")
    diag = np.diag(instance.Lambda)
    top = tuple(int(i) for i in top_k_indices(diag, k))
    bottom = tuple(int(i) for i in bottom_k_indices(diag, k))
    full = ipv_fn(instance, range(instance.p))
    ipv_top = ipv_fn(instance, top)
    dis_top = full - ipv_top
    dis_bottom = full - ipv_fn(instance, bottom)
    report = TheoremReport(
        "theorem3", instance.seed, instance.p, details={"k": k, "epsilon": epsilon, "strong_condition": strong}
    )
    report.record(dis_bottom - dis_top, tolerance, {"top": top, "bottom": bottom, "dis_top": dis_top, "dis_bottom": dis_bottom})
    if strong:
        top_set = set(top)
        for S in all_subsets(instance.p, k):
            if top_set.intersection(S):
                continue
            dis_S = full - ipv_fn(instance, S)
            report.record(dis_S - dis_top, tolerance, {"top": top, "S": S, "dis_top": dis_top, "dis_S": dis_S})
    _check_shrinkage_identity(report, instance, top, ipv_top)
    return report


def ranking_recovery_rate(
    Lambda_diag: np.ndarray, k: int, N: int, replications: int = 100, seed: int = 0
) -> float:
    """Fraction of replications in which the Gradient-Laplace summary of N Gaussian gradients with diagonal
    second moment recovers the true top-k indices"""
    Lambda_diag = np.asarray(Lambda_diag, dtype=np.float64)
    truth = tuple(int(i) for i in top_k_indices(Lambda_diag, k))
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(replications):
        G = rng.standard_normal((N, Lambda_diag.shape[0])) * np.sqrt(Lambda_diag)
        summary = GradientSummary(np.mean(G**2, axis=0))
        hits += select_gradient_laplace(summary, k).indices == truth
    return hits / replications


def write_report(reports: list[TheoremReport], path: str | pathlib.Path, extra: dict | None = None) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {
        **(extra or {}),
        "passed": all(r.passed for r in reports),
        "worst_margin": min((r.worst_margin for r in reports), default=None),
        "reports": [asdict(r) for r in reports],
    }
    with open(path, "w") as f:
        json.dump(body, f, indent=2, sort_keys=True, default=_json_default)
    logging.info(f"theory report with {len(reports)} instances written to {path}")
    return path


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialize {type(value)}")
