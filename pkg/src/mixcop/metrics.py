"""Estimation-quality metrics and the replicated benchmark harness."""
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import simulation as sim
from .data import csv_text, load_matrix_csv
from .estimator import CorrelationMatrix, estimate_matrix

ZERO_TOL = 1e-12
DEFAULT_THRESHOLD = 0.3


def _as_array(m):
    return m.values if isinstance(m, CorrelationMatrix) else np.asarray(m, dtype=float)


def _residuals(est, truth):
    est, truth = _as_array(est), _as_array(truth)
    if est.shape != truth.shape or est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise ValueError(f"dimension mismatch: {est.shape} vs {truth.shape}")
    off = ~np.eye(est.shape[0], dtype=bool)
    res = (est - truth)[off]
    return res[~np.isnan(res)], int(np.isnan(res).sum()) // 2


def missing_pairs(est):
    est = _as_array(est)
    return int(np.isnan(est[np.triu_indices(est.shape[0], 1)]).sum())


def rmse(est, truth):
    """sqrt of the mean squared off-diagonal error; missing entries skipped."""
    res, _ = _residuals(est, truth)
    return math.sqrt(math.fsum(res * res) / res.size) if res.size else math.nan


def mae(est, truth):
    res, _ = _residuals(est, truth)
    return math.fsum(np.abs(res)) / res.size if res.size else math.nan


@dataclass(frozen=True)
class Contingency:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def tpr(self):
        pos = self.tp + self.fn
        return self.tp / pos if pos else math.nan

    @property
    def fpr(self):
        neg = self.fp + self.tn
        return self.fp / neg if neg else math.nan

    @property
    def tnr(self):
        return 1.0 - self.fpr

    @property
    def fnr(self):
        return 1.0 - self.tpr


def _upper_pairs(est, truth):
    est, truth = _as_array(est), _as_array(truth)
    if est.shape != truth.shape:
        raise ValueError(f"dimension mismatch: {est.shape} vs {truth.shape}")
    iu = np.triu_indices(est.shape[0], 1)
    score = np.abs(est[iu])
    real = np.abs(truth[iu]) >= ZERO_TOL
    keep = ~np.isnan(score)
    return score[keep], real[keep]


def classify(est, truth, t=DEFAULT_THRESHOLD):
    """Count pairs i < j predicted non-zero (|rho_hat| >= t) against the truth."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    score, real = _upper_pairs(est, truth)
    pred = score >= t
    return Contingency(
        tp=int(np.sum(pred & real)),
        fp=int(np.sum(pred & ~real)),
        tn=int(np.sum(~pred & ~real)),
        fn=int(np.sum(~pred & real)),
    )


def roc_auc(est, truth):
    """ROC points ``[(fpr, tpr), ...]`` over every distinct |rho_hat| and the
    trapezoidal AUC. Returns ``([], nan)`` when the truth has no zero or no
    non-zero off-diagonal entry."""
    score, real = _upper_pairs(est, truth)
    n_pos = int(real.sum())
    n_neg = int(real.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        return [], math.nan
    order = np.argsort(-score, kind="stable")
    s, r = score[order], real[order]
    # one ROC point per distinct threshold, at the last index of each tie run
    last = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    tps = np.cumsum(r)[last]
    fps = np.cumsum(~r)[last]
    tpr = np.concatenate([[0.0], tps / n_pos])
    fpr = np.concatenate([[0.0], fps / n_neg])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return list(zip(fpr.tolist(), tpr.tolist())), auc


@dataclass
class EvalReport:
    rmse: float
    mae: float
    auc: float
    contingency: Contingency
    roc: list = field(default_factory=list, repr=False)
    n_missing: int = 0
    rep: int = 0
    seed: str = ""
    n: int = 0
    d: int = 0
    recipe: str = ""
    status: str = "ok"


def evaluate(est, truth, t=DEFAULT_THRESHOLD, **meta):
    roc, auc = roc_auc(est, truth)
    return EvalReport(
        rmse=rmse(est, truth),
        mae=mae(est, truth),
        auc=auc,
        contingency=classify(est, truth, t),
        roc=roc,
        n_missing=missing_pairs(est),
        **meta,
    )


# --- recipes -----------------------------------------------------------------

@dataclass(frozen=True)
class SigmaRecipe:
    """How the true correlation matrix of a benchmark is produced.

    Text forms: ``blocks`` (the 7/10/2/6/5 layout), ``blocks:7x0.8,10x0.6``,
    ``sparse:<gamma>`` (with ``dim``) and ``file:<matrix.csv>``. The matrix is
    built once per recipe from ``sigma_seed`` and shared by all replications.
    """

    text: str
    dim: int = 30
    sigma_seed: int = 0

    def build(self):
        mode, _, arg = self.text.partition(":")
        mode = mode.strip().lower()
        if mode == "blocks":
            blocks = sim.DEFAULT_BLOCKS if not arg else _parse_blocks(arg)
            return sim.gen_sigma_blocks(blocks, permute_seed=self.sigma_seed)
        if mode == "sparse":
            try:
                gamma = float(arg)
            except ValueError:
                raise ValueError(f"sparse recipe needs a gamma value, got {arg!r}") from None
            return sim.gen_sigma_sparse(gamma, self.dim, seed=self.sigma_seed)
        if mode == "file":
            return load_matrix_csv(arg)[1]
        raise ValueError(f"unknown sigma recipe {self.text!r}")


def _parse_blocks(arg):
    blocks = []
    for part in arg.split(","):
        m = re.fullmatch(r"\s*(\d+)\s*[x@]\s*(-?[0-9.eE+-]+)\s*", part)
        if not m:
            raise ValueError(f"cannot parse block {part!r}; use SIZExVALUE")
        blocks.append((int(m.group(1)), float(m.group(2))))
    return blocks


# --- benchmark ---------------------------------------------------------------

def _one_replication(args):
    sigma, margins, n, child, rep, recipe, t = args
    meta = dict(rep=rep, seed=f"{child.entropy}:{rep}", n=n, d=sigma.shape[0], recipe=recipe)
    try:
        data = sim.sample_dataset(sigma, margins, n, seed=child)
        est = estimate_matrix(data)
        return evaluate(est, sigma, t, **meta)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        nan = math.nan
        return EvalReport(nan, nan, nan, Contingency(0, 0, 0, 0), status=f"failed: {exc}", **meta)


def _stats(values):
    v = [x for x in values if not math.isnan(x)]
    k = len(v)
    if k == 0:
        return math.nan, math.nan, math.nan
    mean = math.fsum(v) / k
    sd = math.sqrt(math.fsum((x - mean) ** 2 for x in v) / (k - 1)) if k > 1 else 0.0
    return mean, sd, 1.959963984540054 * sd / math.sqrt(k)


def summarize(reports, recipe="", n=0):
    ok = [r for r in reports if r.status == "ok"]
    out = {"recipe": recipe, "n": n, "reps": len(reports), "failed": len(reports) - len(ok)}
    for key in ("rmse", "mae", "auc"):
        mean, sd, ci = _stats([getattr(r, key) for r in ok])
        out[f"{key}_mean"], out[f"{key}_sd"], out[f"{key}_ci"] = mean, sd, ci
    return out


@dataclass
class BenchResult:
    sigma: np.ndarray
    reports: list
    summary: dict


def bench_run(recipe, margins, n, reps, seed=0, threads=1, t=DEFAULT_THRESHOLD):
    """Replicate sample -> estimate -> evaluate ``reps`` times.

    Replication k draws from child k of ``SeedSequence(seed)``, so results
    are identical for any ``threads``. Failed replications are kept with a
    ``failed: ...`` status and counted in the summary.
    """
    if isinstance(recipe, str):
        recipe = SigmaRecipe(recipe)
    sigma = recipe.build()
    if isinstance(margins, str):
        margins = sim.parse_margins(margins, dim=sigma.shape[0])
    if len(margins) != sigma.shape[0]:
        raise ValueError("margins length does not match the recipe dimension")
    children = sim.replication_seeds(seed, reps)
    jobs = [(sigma, margins, n, child, k, recipe.text, t) for k, child in enumerate(children)]
    if threads > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(_one_replication, jobs))
    else:
        reports = [_one_replication(job) for job in jobs]
    return BenchResult(sigma, reports, summarize(reports, recipe.text, n))


REPLICATION_COLUMNS = ("recipe", "n", "d", "rep", "seed", "status", "rmse", "mae", "auc",
                       "tp", "fp", "tn", "fn", "n_missing")
SUMMARY_COLUMNS = ("recipe", "n", "reps", "failed", "rmse_mean", "rmse_sd", "rmse_ci",
                   "mae_mean", "mae_sd", "mae_ci", "auc_mean", "auc_sd", "auc_ci")


def replications_csv(reports):
    rows = []
    for r in reports:
        c = r.contingency
        rows.append([r.recipe, r.n, r.d, r.rep, r.seed, r.status, r.rmse, r.mae, r.auc,
                     c.tp, c.fp, c.tn, c.fn, r.n_missing])
    return csv_text(REPLICATION_COLUMNS, rows)


def summary_csv(summaries):
    return csv_text(SUMMARY_COLUMNS, [[s[k] for k in SUMMARY_COLUMNS] for s in summaries])
