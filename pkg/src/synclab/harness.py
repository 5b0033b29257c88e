"""Deterministic Monte Carlo runner for the accuracy studies.

A trial builds one impaired stream, synchronizes, and scores the result:
a trial fails when nothing is detected or the timing error is at least
cp_len/11 samples.  CFO mean-square error averages over detected trials.
Per-trial seeds derive as master_seed XOR trial index, so a sweep cell is
reproducible in isolation and two sweep cells sharing a channel
configuration see identical streams (which is how the word-length study
isolates precision effects from channel randomness).

Aggregation is order-independent: counters are integers and the error
sums use math.fsum over records sorted by trial index, so worker layout
can never change a digit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .channel import ChannelConfig, build_trial_stream, scenario_config
from .datapath import WordLengthConfig
from .estimator import SyncConfig, synchronize
from .preamble import PhyParams, PreambleTemplate, default_template


@dataclass(frozen=True)
class TrialRecord:
    """Score of a single trial."""

    trial: int
    seed: int
    scenario: str
    snr_db: float
    cfo_true: float
    detected: bool
    sto_err: Optional[int]
    cfo_err: Optional[float]
    cfo_err_ac1: Optional[float]
    cfo_err_ac2: Optional[float]
    fail: bool
    last_sample_consumed: int
    true_sto: int

    def csv_row(self) -> list:
        return [
            self.seed,
            self.scenario,
            self.snr_db,
            self.cfo_true,
            int(self.detected),
            "" if self.sto_err is None else self.sto_err,
            "" if self.cfo_err is None else repr(self.cfo_err),
        ]


TRIAL_CSV_HEADER = ["seed", "scenario", "snr_db", "cfo_true", "detected", "sto_err", "cfo_err"]


@dataclass(frozen=True)
class TrialStats:
    """Aggregate over one run's trials."""

    trials: int
    fails: int
    detections: int
    fail_rate: float
    cfo_mse: float

    @property
    def fail_ci(self) -> float:
        """95% binomial confidence half-width of the fail rate."""
        if self.trials == 0:
            return 0.0
        p = self.fail_rate
        return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    @classmethod
    def from_records(cls, records: Sequence[TrialRecord]) -> "TrialStats":
        ordered = sorted(records, key=lambda rec: rec.trial)
        trials = len(ordered)
        fails = sum(1 for rec in ordered if rec.fail)
        detected = [rec for rec in ordered if rec.detected]
        if detected:
            mse = math.fsum(rec.cfo_err**2 for rec in detected) / len(detected)
        else:
            mse = float("nan")
        return cls(
            trials=trials,
            fails=fails,
            detections=len(detected),
            fail_rate=fails / trials if trials else 0.0,
            cfo_mse=mse,
        )


def is_fail(sto_hat: Optional[int], true_sto: int, params: PhyParams) -> bool:
    """Timing miss test: no detection, or |error| >= cp_len/11 samples."""
    if sto_hat is None:
        return True
    return abs(sto_hat - true_sto) >= params.sto_fail_threshold


def run_trial(
    cfg: ChannelConfig,
    seed: int,
    trial: int = 0,
    params: PhyParams | None = None,
    template: PreambleTemplate | None = None,
    word_cfg: WordLengthConfig | None = None,
    sync_cfg: SyncConfig | None = None,
) -> TrialRecord:
    """One build-synchronize-score pass."""
    params = params or PhyParams()
    template = template or default_template(params)
    stream, true_sto = build_trial_stream(template, cfg, params, seed)
    result = synchronize(stream, template, params, word_cfg, sync_cfg)
    if result.detected:
        sto_err = result.sto_hat - true_sto
        cfo_err = result.cfo_hat - cfg.cfo
        cfo_err_ac1 = result.cfo_hat_ac1 - cfg.cfo
        cfo_err_ac2 = result.cfo_hat_ac2 - cfg.cfo
        fail = is_fail(result.sto_hat, true_sto, params)
    else:
        sto_err = cfo_err = cfo_err_ac1 = cfo_err_ac2 = None
        fail = True
    return TrialRecord(
        trial=trial,
        seed=seed,
        scenario=cfg.scenario,
        snr_db=cfg.snr_db,
        cfo_true=cfg.cfo,
        detected=result.detected,
        sto_err=sto_err,
        cfo_err=cfo_err,
        cfo_err_ac1=cfo_err_ac1,
        cfo_err_ac2=cfo_err_ac2,
        fail=fail,
        last_sample_consumed=result.last_sample_consumed,
        true_sto=true_sto,
    )


def run_trials(
    cfg: ChannelConfig,
    n_trials: int,
    master_seed: int,
    params: PhyParams | None = None,
    template: PreambleTemplate | None = None,
    word_cfg: WordLengthConfig | None = None,
    sync_cfg: SyncConfig | None = None,
    collect: bool = False,
):
    """Run n_trials with per-trial seeds master_seed XOR index.

    Returns TrialStats, or (TrialStats, records) with collect=True.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    params = params or PhyParams()
    template = template or default_template(params)
    records = [
        run_trial(cfg, master_seed ^ trial, trial, params, template, word_cfg, sync_cfg)
        for trial in range(n_trials)
    ]
    stats = TrialStats.from_records(records)
    return (stats, records) if collect else stats


@dataclass(frozen=True)
class SweepRow:
    """One sweep cell with its axis values and resulting stats."""

    scenario: str
    snr_db: float
    cfo: float
    mode: str
    fa: Optional[int]
    fx: Optional[int]
    stats: TrialStats
    runtime_s: float

    def csv_row(self) -> list:
        return [
            self.scenario,
            repr(float(self.snr_db)),
            repr(float(self.cfo)),
            self.mode,
            "" if self.fa is None else self.fa,
            "" if self.fx is None else self.fx,
            self.stats.trials,
            repr(self.stats.fail_rate),
            repr(self.stats.fail_ci),
            repr(self.stats.cfo_mse),
            f"{self.runtime_s:.3f}",
        ]

    def summary(self) -> str:
        s = self.stats
        word = "" if self.fa is None else f" fa={self.fa} fx={self.fx}"
        return (
            f"{self.scenario} snr={self.snr_db:g}dB cfo={self.cfo:g} {self.mode}{word}: "
            f"fail_rate={s.fail_rate:.4f} (ci {s.fail_ci:.4f}) cfo_mse={s.cfo_mse:.3e} "
            f"[{s.trials} trials, {self.runtime_s:.1f}s]"
        )


SWEEP_CSV_HEADER = [
    "scenario", "snr_db", "cfo", "mode", "fa", "fx",
    "trials", "fail_rate", "fail_ci", "cfo_mse", "runtime_s",
]


def sweep(
    scenarios: Iterable[str],
    snrs_db: Iterable[float],
    cfos: Iterable[float],
    modes: Iterable[str] = ("float",),
    word_cfgs: Iterable[WordLengthConfig] = (WordLengthConfig(),),
    n_trials: int = 1000,
    master_seed: int = 0,
    params: PhyParams | None = None,
    template: PreambleTemplate | None = None,
    progress=None,
) -> list[SweepRow]:
    """Cross-product sweep; one SweepRow per cell.

    Every cell reuses the same master seed, so cells that share a channel
    configuration run on identical streams.  Float mode ignores the word
    configs (one float row per channel cell); fixed mode emits one row per
    word config.
    """
    params = params or PhyParams()
    template = template or default_template(params)
    rows: list[SweepRow] = []
    for scenario in scenarios:
        for snr_db in snrs_db:
            for cfo in cfos:
                cfg = scenario_config(scenario, snr_db=snr_db, cfo=cfo)
                for mode in modes:
                    cell_words = list(word_cfgs) if mode == "fixed" else [None]
                    for wcfg in cell_words:
                        sync_cfg = SyncConfig.for_params(params, mode)
                        start = time.perf_counter()
                        stats = run_trials(
                            cfg, n_trials, master_seed,
                            params, template, wcfg, sync_cfg,
                        )
                        row = SweepRow(
                            scenario=scenario,
                            snr_db=snr_db,
                            cfo=cfo,
                            mode=mode,
                            fa=wcfg.fa if wcfg else None,
                            fx=wcfg.fx if wcfg else None,
                            stats=stats,
                            runtime_s=time.perf_counter() - start,
                        )
                        rows.append(row)
                        if progress is not None:
                            progress(row)
    return rows
