""" End-to-end experiments behind the command-line subcommands """

import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass, replace
from functools import partial

from .config import EXIT_FALSIFIED, EXIT_OK, ConfigError, ExperimentConfig, check_k_grid
from .handler import ExperimentHandler, aggregate_rows
from ..bandit.agent import Posterior
from ..bandit.runner import BanditTrace, run_seed, summarize, write_summary
from ..data.dataset import Dataset, Task
from ..data.io import load_csv, split_standardize
from ..data.synthetic import make_synthetic
from ..laplace.system import LaplaceSystem, Likelihood, build_system, default_prior_diag, estimate_noise_var
from ..metrics.coverage import coverage_sweep
from ..metrics.ensemble import ensemble_rows
from ..metrics.wasserstein import subsample_test_points, wasserstein_sweep
from ..net.model import MlpModel, forward_batch, init_model
from ..net.train import ensemble_train, task_loss, train_map
from ..select.selection import SelectionMethod, SubsetSelection
from ..select.selectors import gradient_summary, select
from ..theory.instances import make_classification_instance, make_cpi_instance, make_dd_instance, make_random_instance
from ..theory.ipv import ipv
from ..theory.verify import (
    IpvFn,
    TheoremReport,
    verify_classification_monotonicity,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
    write_report,
)

# Every tenth nested-monotonicity instance is pinned near-singular
NEAR_SINGULAR_EVERY = 10
NEAR_SINGULAR_EIGENVALUE = 1e-8


@dataclass
class FittedRun:
    """Everything one seed of a Laplace experiment needs after training"""

    train: Dataset
    test: Dataset
    model: MlpModel
    system: LaplaceSystem
    oracle: object | None
    test_indices: np.ndarray


def load_source(cfg: ExperimentConfig) -> Dataset | None:
    if cfg.data is None:
        return None
    spec = cfg.data
    ds = load_csv(spec.path, spec.target_column, spec.delimiter, spec.header, spec.task)
    check_k_grid(cfg, ds.d)
    return ds


def prepare_data(cfg: ExperimentConfig, source: Dataset | None, seed: int) -> tuple[Dataset, Dataset, object | None]:
    if cfg.synthetic is not None:
        return make_synthetic(replace(cfg.synthetic, seed=seed))
    train, test = split_standardize(source, cfg.data.test_fraction, seed)
    return train, test, None


def likelihood_for(data: Dataset) -> Likelihood:
    return Likelihood.BINARY_CLASSIFICATION if data.task == Task.BINARY else Likelihood.REGRESSION


def fit_run(cfg: ExperimentConfig, source: Dataset | None, seed: int) -> FittedRun:
    """Train the MAP network for one seed and assemble its Laplace system"""
    train, test, oracle = prepare_data(cfg, source, seed)
    model = init_model(train.d, cfg.hidden_widths, seed)
    model = train_map(model, train, task_loss(train), replace(cfg.train, seed=seed), cfg.prior_precision)
    likelihood = likelihood_for(train)
    noise_var = estimate_noise_var(model, train) if likelihood == Likelihood.REGRESSION else 1.0
    system = build_system(model, train, likelihood, noise_var, default_prior_diag(model.p, cfg.prior_precision))
    test, test_indices = subsample_test_points(test, cfg.test_subsample, seed)
    return FittedRun(train, test, model, system, oracle, test_indices)


def build_selections(cfg: ExperimentConfig, run: FittedRun) -> list[SubsetSelection]:
    summary = gradient_summary(run.model, run.train)
    selections = []
    for spec in cfg.methods:
        method = SelectionMethod.from_label(spec.method)
        for k in spec.k or (None,):
            selection = select(method, k, run.model, run.system, summary, cfg.pool)
            selections.append(selection)
            logging.debug(f"{method.label} selected {selection.k} parameters")
    return selections


def _run_payload(run: FittedRun, frame: pd.DataFrame) -> dict:
    return {
        "p": run.model.p,
        "n_train": run.train.n,
        "noise_var": run.system.noise_var,
        "test_indices": run.test_indices,
        "rows": frame.to_dict(orient="records"),
    }


def _write_laplace_outputs(handler: ExperimentHandler, frames: dict[int, tuple[FittedRun, pd.DataFrame]]) -> pd.DataFrame:
    name = handler.prefix
    for seed, (run, frame) in frames.items():
        handler.write_csv(f"{name}_seed{seed}", frame, seed)
        handler.write_json_shard(f"{name}_seed{seed}", _run_payload(run, frame), seed)
    aggregate = aggregate_rows([frame for _, frame in frames.values()])
    handler.write_csv(f"{name}_aggregate", aggregate)
    return aggregate


def wasserstein_seed(cfg: ExperimentConfig, source: Dataset | None, seed: int) -> tuple[FittedRun, pd.DataFrame]:
    run = fit_run(cfg, source, seed)
    frame = wasserstein_sweep(run.system, build_selections(cfg, run), run.test, run.model, cfg.variance, seed)
    return run, frame


def cmd_wasserstein(cfg: ExperimentConfig, handler: ExperimentHandler) -> int:
    source = load_source(cfg)
    frames = handler.run_seeds(partial(wasserstein_seed, cfg, source))
    _write_laplace_outputs(handler, frames)
    return EXIT_OK


def reference_oracle(cfg: ExperimentConfig, train: Dataset, seed: int):
    """Wider network trained on the full training partition, standing in for the unknown target function"""
    epochs = cfg.coverage.oracle_epochs or cfg.train.epochs
    model = init_model(train.d, cfg.coverage.oracle_widths, seed)
    model = train_map(model, train, task_loss(train), replace(cfg.train, seed=seed, epochs=epochs), cfg.prior_precision)
    return partial(forward_batch, model)


def coverage_seed(cfg: ExperimentConfig, source: Dataset | None, seed: int) -> tuple[FittedRun, pd.DataFrame]:
    run = fit_run(cfg, source, seed)
    oracle = run.oracle if run.oracle is not None else reference_oracle(cfg, run.train, seed)
    level = cfg.coverage.level
    frame = coverage_sweep(
        run.system, build_selections(cfg, run), run.test, run.model, oracle, level, cfg.coverage.variance, seed=seed
    )
    if cfg.coverage.ensemble_members >= 2:
        members = ensemble_train(
            run.train,
            cfg.coverage.ensemble_members,
            replace(cfg.train, seed=seed),
            cfg.hidden_widths,
            prior_precision=cfg.prior_precision,
        )
        frame = pd.concat([frame, ensemble_rows(members, run.test, oracle, level, seed)], ignore_index=True)
    return run, frame


def cmd_coverage(cfg: ExperimentConfig, handler: ExperimentHandler) -> int:
    source = load_source(cfg)
    frames = handler.run_seeds(partial(coverage_seed, cfg, source))
    _write_laplace_outputs(handler, frames)
    return EXIT_OK


def theory_seed(cfg: ExperimentConfig, ipv_fn: IpvFn, seed: int) -> dict[str, list[TheoremReport]]:
    spec = cfg.theory
    reports = {"theorem1": [], "theorem2": [], "theorem3": [], "classification": []}
    for i in range(spec.instances):
        instance_seed = seed * spec.instances + i
        min_eigenvalue = NEAR_SINGULAR_EIGENVALUE if i % NEAR_SINGULAR_EVERY == 0 else None
        reports["theorem1"].append(
            verify_theorem1(
                make_random_instance(spec.theorem1_p, instance_seed, min_eigenvalue=min_eigenvalue), spec.max_p, ipv_fn
            )
        )
        k2 = spec.theorem2_k[i % len(spec.theorem2_k)]
        reports["theorem2"].append(verify_theorem2(make_cpi_instance(spec.theorem2_p, instance_seed), k2, ipv_fn))
        dd = make_dd_instance(spec.theorem3_p, spec.epsilon, spec.ratio_margin, instance_seed, k=spec.theorem3_k)
        reports["theorem3"].append(verify_theorem3(dd, spec.theorem3_k, spec.epsilon, ipv_fn))
        reports["classification"].append(
            verify_classification_monotonicity(
                make_classification_instance(spec.classification_p, instance_seed), spec.max_p, seed=instance_seed
            )
        )
    return reports


def theory_summary(by_theorem: dict[str, list[TheoremReport]]) -> pd.DataFrame:
    rows = []
    for theorem, reports in by_theorem.items():
        failures = sum(not r.passed for r in reports)
        worst = min(r.worst_margin for r in reports)
        rows.append([theorem, len(reports), failures == 0, failures, worst])
    return pd.DataFrame(rows, columns=["theorem", "instances", "passed", "failures", "worst_margin"])


def cmd_theory(cfg: ExperimentConfig, handler: ExperimentHandler, ipv_fn: IpvFn = ipv) -> int:
    """Brute-force the IPV ordering results; returns the falsification exit code if any instance fails"""
    per_seed = handler.run_seeds(partial(theory_seed, cfg, ipv_fn))
    by_theorem: dict[str, list[TheoremReport]] = {}
    for seed in cfg.seeds:
        for theorem, reports in per_seed[seed].items():
            by_theorem.setdefault(theorem, []).extend(reports)
    extra = {"config_hash": cfg.hash, "seeds": list(cfg.seeds)}
    for theorem, reports in by_theorem.items():
        write_report(reports, handler.output_dir / f"theory_{theorem}.json", extra)
    summary = theory_summary(by_theorem)
    handler.write_csv("theory_summary", summary)
    if not summary["passed"].all():
        failed = summary.loc[~summary["passed"], "theorem"].tolist()
        logging.error(f"falsification detected for {failed}")
        return EXIT_FALSIFIED
    return EXIT_OK


def bandit_grid(cfg: ExperimentConfig) -> list[tuple[Posterior, int | None]]:
    grid = []
    for spec in cfg.methods:
        posterior = Posterior.from_label(spec.method)
        grid.extend((posterior, k) for k in (spec.k if posterior.uses_k else (None,)))
    return grid


def cmd_bandit(cfg: ExperimentConfig, handler: ExperimentHandler) -> int:
    grid = bandit_grid(cfg)
    if cfg.wheel.horizon < cfg.agent.warm_rounds:
        raise ConfigError(f"horizon {cfg.wheel.horizon} is shorter than the {cfg.agent.warm_rounds} warm-start rounds")
    tasks = {}
    for posterior, k in grid:
        agent = replace(cfg.agent, posterior=posterior, k=k if k is not None else cfg.agent.k)
        for seed in cfg.seeds:
            tasks[(posterior.label, k, seed)] = (run_seed, (cfg.wheel, agent, seed))
    traces: dict[tuple, BanditTrace] = handler.run(tasks)

    summaries = []
    for posterior, k in grid:
        label = posterior.label if k is None else f"{posterior.label}_k{k}"
        per_seed = {}
        for seed in cfg.seeds:
            trace = traces[(posterior.label, k, seed)]
            handler.write_csv(f"bandit_{label}_seed{seed}", trace.to_frame(), seed)
            per_seed[seed] = trace
        agent = replace(cfg.agent, posterior=posterior, k=k if k is not None else cfg.agent.k)
        summaries.append(summarize(agent, per_seed))
    write_summary(summaries, handler.output_dir / "bandit_summary.json", {"config_hash": cfg.hash, "delta": cfg.wheel.delta})
    table = pd.DataFrame(
        [[s.posterior, s.k, s.mean, s.ci95] for s in summaries], columns=["method", "k", "mean", "ci95"]
    )
    handler.write_csv("bandit_summary", table)
    return EXIT_OK


COMMANDS = {
    "wasserstein": cmd_wasserstein,
    "coverage": cmd_coverage,
    "theory": cmd_theory,
    "bandit": cmd_bandit,
}
