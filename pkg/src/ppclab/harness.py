"""Seeded experiment drivers: error-rate simulation, sweeps and distance studies.

Every trial ``t`` draws from its own generator, seeded by
``SeedSequence(master_seed, spawn_key=(t,))``, so results do not depend on
how trials are sharded across workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import BinaryInputDMC, bec, from_config, transmit
from .ensemble import (
    ParityCheckEnsemble,
    codebook_size,
    gallager_ldpc_matrix,
    sample_constrained_code,
    sample_unconstrained_code,
)
from .gf2 import BitMatrix
from .info import wilson_interval
from .polar import (
    DEFAULT_BETA,
    build_design,
    polar_encode,
    polar_generator_matrix,
    polar_parity_matrix,
    select_frozen_set_for_rate,
)
from .typicality import DEFAULT_EPS, decision_from_mask, ml_decode, typical_mask

__all__ = [
    "CSV_HEADER",
    "MAX_CODEBOOK",
    "ExperimentConfig",
    "ExperimentResult",
    "trial_rng",
    "build_ensemble",
    "with_blocklength",
    "run_error_sim",
    "run_rate_sweep",
    "min_distance_exact",
    "min_weight_linear",
    "run_mindist_study",
    "emit_results",
    "load_results",
    "write_csv",
    "seed_from_env",
]

CSV_HEADER = f"# ppc-lab v{__version__}"
MAX_CODEBOOK = 1 << 20


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one error-rate run."""

    channel: dict = field(default_factory=lambda: {"kind": "bec", "param": 0.5})
    ensemble: dict = field(default_factory=lambda: {"h": {"kind": "empty", "n": 8}})
    rate: float = 0.125
    eps_typicality: float = DEFAULT_EPS
    trials: int = 1000
    master_seed: int = 0
    parallelism: int = 1
    output: str | None = None
    decoder: str = "jt"
    randomize_message: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.eps_typicality <= 0:
            raise ValueError("eps_typicality must be positive")
        if self.decoder not in ("jt", "ml"):
            raise ValueError(f"unknown decoder {self.decoder!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    config: dict
    n: int
    codebook_size: int
    trials: int
    errors: int
    error_rate: float
    ci_low: float
    ci_high: float
    no_typical: int
    non_unique: int
    wrong_unique: int
    e1_count: int
    e2_count: int
    wall_time: float = 0.0
    version: str = __version__

    METRICS = ("n", "codebook_size", "trials", "errors", "error_rate", "ci_low", "ci_high",
               "half_width", "no_typical", "non_unique", "wrong_unique", "e1_count", "e2_count")

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def metrics(self) -> dict:
        row = {k: getattr(self, k) for k in self.METRICS}
        row.update(rate=self.config["rate"], seed=self.config["master_seed"])
        return row


def trial_rng(master_seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(t),)))


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------


def build_ensemble(ens_cfg: dict, ch: BinaryInputDMC) -> ParityCheckEnsemble:
    """Turn an ensemble config into a :class:`ParityCheckEnsemble`.

    ``ens_cfg["h"]`` is matrix text, a path to a matrix file, or one of
    ``{"kind": "polar", "ell", "beta", "method", "trials", "seed"}``,
    ``{"kind": "ldpc", "n", "row_weight", "col_weight", "seed"}``,
    ``{"kind": "identity", "n"}``, ``{"kind": "empty", "n"}`` and
    ``{"kind": "unconstrained", "n"}`` (the plain i.i.d. ensemble).
    """
    spec = ens_cfg.get("h", ens_cfg)
    if isinstance(spec, str):
        path = Path(spec)
        h = BitMatrix.load(path) if path.exists() else BitMatrix.from_text(spec)
        return ParityCheckEnsemble(h, ch, "explicit")
    kind = spec.get("kind")
    if kind == "polar":
        rng = np.random.default_rng(spec.get("seed", 0))
        design = build_design(spec, ch, rng)
        return ParityCheckEnsemble(polar_parity_matrix(design), ch, "polar", {"design": design})
    if kind == "ldpc":
        rng = np.random.default_rng(spec.get("seed", 0))
        h = gallager_ldpc_matrix(int(spec["n"]), int(spec.get("row_weight", 4)),
                                 int(spec.get("col_weight", 2)), rng)
        return ParityCheckEnsemble(h, ch, "ldpc")
    if kind == "identity":
        return ParityCheckEnsemble(BitMatrix.identity(int(spec["n"])), ch, "identity")
    if kind in ("empty", "unconstrained"):
        return ParityCheckEnsemble(BitMatrix.zeros(0, int(spec["n"])), ch, kind)
    raise ValueError(f"unknown ensemble kind {kind!r}")


def with_blocklength(ens_cfg: dict, n: int) -> dict:
    """Copy of ``ens_cfg`` rescaled to blocklength ``n`` (polar needs a power of 2)."""
    spec = dict(ens_cfg.get("h", ens_cfg))
    if spec.get("kind") == "polar":
        ell = int(n).bit_length() - 1
        if 1 << ell != n:
            raise ValueError(f"polar blocklength must be a power of two, got {n}")
        spec["ell"] = ell
    elif spec.get("kind") in ("ldpc", "identity", "empty", "unconstrained"):
        spec["n"] = int(n)
    else:
        raise ValueError("explicit matrices cannot be rescaled")
    return dict(ens_cfg, h=spec)


# ---------------------------------------------------------------------------
# error-rate simulation
# ---------------------------------------------------------------------------


def _run_shard(cfg_dict: dict, lo: int, hi: int) -> np.ndarray:
    """Counts ``[errors, no_typical, non_unique, wrong_unique, e1, e2]`` for trials ``lo..hi-1``."""
    cfg = ExperimentConfig.from_dict(cfg_dict)
    ch = from_config(cfg.channel)
    ens = build_ensemble(cfg.ensemble, ch)
    unconstrained = ens.kind == "unconstrained"
    counts = np.zeros(6, dtype=np.int64)
    for t in range(lo, hi):
        rng = trial_rng(cfg.master_seed, t)
        if unconstrained:
            code = sample_unconstrained_code(ch.q, ens.n, cfg.rate, rng)
        else:
            code = sample_constrained_code(ens, cfg.rate, rng)
        m = int(rng.integers(1, code.size + 1)) if cfg.randomize_message else 1
        y = transmit(ch, code.codewords[m - 1], rng)
        typ = typical_mask(ch, cfg.eps_typicality, code.codewords, y[None, :])
        e1 = not typ[m - 1]
        e2 = bool(typ.sum() - typ[m - 1] > 0)
        if cfg.decoder == "jt":
            out = decision_from_mask(typ)
        else:
            out = ml_decode(ch, code, y)
        counts[4] += e1
        counts[5] += e2
        if out.index == m:
            continue
        counts[0] += 1
        if out.index is not None:
            counts[3] += 1
        elif out.typical_count == 0:
            counts[1] += 1
        else:
            counts[2] += 1
    return counts


def _shards(trials: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(int(workers), trials))
    edges = np.linspace(0, trials, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_error_sim(cfg: ExperimentConfig) -> ExperimentResult:
    """Monte Carlo error probability of the constrained ensemble.

    Message 1 is sent in every trial unless ``cfg.randomize_message``.
    """
    ch = from_config(cfg.channel)
    ens = build_ensemble(cfg.ensemble, ch)
    size = codebook_size(ens.n, cfg.rate)
    if size > MAX_CODEBOOK:
        raise ValueError(f"codebook of {size} words exceeds the decoder limit {MAX_CODEBOOK}")
    start = time.perf_counter()
    cfg_dict = cfg.to_dict()
    shards = _shards(cfg.trials, cfg.parallelism)
    if len(shards) == 1:
        totals = _run_shard(cfg_dict, *shards[0])
    else:
        with ProcessPoolExecutor(max_workers=len(shards)) as pool:
            parts = pool.map(_run_shard, [cfg_dict] * len(shards),
                             [a for a, _ in shards], [b for _, b in shards])
            totals = sum(parts)
    errors = int(totals[0])
    est = wilson_interval(errors, cfg.trials)
    return ExperimentResult(
        config=cfg_dict,
        n=ens.n,
        codebook_size=size,
        trials=cfg.trials,
        errors=errors,
        error_rate=est.p,
        ci_low=est.low,
        ci_high=est.high,
        no_typical=int(totals[1]),
        non_unique=int(totals[2]),
        wrong_unique=int(totals[3]),
        e1_count=int(totals[4]),
        e2_count=int(totals[5]),
        wall_time=time.perf_counter() - start,
    )


def run_rate_sweep(base: ExperimentConfig, rates, blocklengths) -> list[dict]:
    """Error rate over the ``blocklengths x rates`` grid, one metrics row per cell."""
    rows = []
    for n in blocklengths:
        ens_cfg = with_blocklength(base.ensemble, int(n))
        for rate in rates:
            cfg = replace(base, ensemble=ens_cfg, rate=float(rate))
            rows.append(run_error_sim(cfg).metrics())
    return rows


# ---------------------------------------------------------------------------
# minimum distance
# ---------------------------------------------------------------------------


def min_distance_exact(codewords) -> int:
    """Minimum pairwise Hamming distance of an explicit list of codewords."""
    words = np.atleast_2d(np.asarray(codewords, dtype=np.uint8))
    m = words.shape[0]
    if m < 2:
        raise ValueError("need at least two codewords")
    if m > 1 << 16:
        raise ValueError("pairwise scan limited to 2^16 codewords")
    packed = np.packbits(words, axis=1)
    best = words.shape[1]
    for i in range(m - 1):
        d = np.bitwise_count(packed[i] ^ packed[i + 1:]).sum(axis=1, dtype=np.int64)
        best = min(best, int(d.min()))
        if best == 0:
            break
    return best


def min_weight_linear(gen: BitMatrix) -> int:
    """Minimum nonzero weight of the code spanned by the rows of ``gen``."""
    if gen.nrows == 0:
        raise ValueError("empty generator")
    if gen.nrows > 24:
        raise ValueError("too many generator rows to enumerate")
    span = [0]
    for row in gen.rows:
        span += [w ^ row for w in span]
    return min(bin(w).count("1") for w in span[1:])


def run_mindist_study(
    ell: int,
    rate: float,
    samples: int,
    rng: np.random.Generator,
    channel: BinaryInputDMC | None = None,
    beta: float = DEFAULT_BETA,
) -> dict:
    """Compare the ordinary polar code with sampled PPC codes of the same size.

    The polar code keeps the ``round(n R)`` most reliable indices (frozen bits
    zero).  PPC codes draw ``codebook_size(n, R)`` words i.i.d. from a random
    coset of the threshold-designed polar parity-check matrix.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    ch = channel or bec(0.5)
    n = 1 << ell
    size = codebook_size(n, rate)
    if size > 1 << 12:
        raise ValueError("codebook too large for the distance study")
    method = "bec-exact" if ch.config.get("kind") == "bec" else "exhaustive"
    thr_design = build_design({"ell": ell, "beta": beta, "method": method}, ch)
    polar_design = select_frozen_set_for_rate(thr_design.cond_entropies, math.log2(size) / n, beta)
    gen = polar_generator_matrix(polar_design)
    k = gen.nrows
    u = np.zeros((1 << k, n), dtype=np.uint8)
    info = list(polar_design.info)
    for c in range(1 << k):
        for j, idx in enumerate(info):
            u[c, idx] = (c >> j) & 1
    polar_words = polar_encode(ell, u)
    polar_d = min_distance_exact(polar_words)
    ens = ParityCheckEnsemble(polar_parity_matrix(thr_design), ch, "polar")
    dists = []
    dup = 0
    for _ in range(samples):
        code = sample_constrained_code(ens, rate, rng)
        d = min_distance_exact(code.codewords)
        dup += d == 0
        dists.append(d)
    dists = np.array(dists)
    return {
        "ell": ell,
        "n": n,
        "rate": rate,
        "codebook_size": size,
        "polar_info_bits": k,
        "polar_min_distance": polar_d,
        "polar_min_weight": min_weight_linear(gen),
        "ppc_frozen": len(thr_design.frozen),
        "ppc_samples": samples,
        "ppc_mean": float(dists.mean()),
        "ppc_min": int(dists.min()),
        "ppc_max": int(dists.max()),
        "ppc_with_duplicates": int(dup),
        "ppc_distances": dists.tolist(),
    }


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def write_csv(rows: list[dict], path) -> Path:
    """Write metric rows with the versioned comment header; floats use ``repr``."""
    path = Path(path)
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    path.write_text(buf.getvalue())
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def emit_results(res: ExperimentResult, path, stem: str = "result") -> tuple[Path, Path]:
    """Write ``<stem>.json`` (everything) and ``<stem>.csv`` (metrics only) into ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    jpath = out / f"{stem}.json"
    jpath.write_text(json.dumps(asdict(res), indent=2, sort_keys=True))
    cpath = write_csv([res.metrics()], out / f"{stem}.csv")
    return jpath, cpath


def load_results(path) -> ExperimentResult:
    path = Path(path)
    if path.is_dir():
        path = path / "result.json"
    return ExperimentResult(**json.loads(path.read_text()))


def seed_from_env(default: int) -> int:
    env = os.environ.get("PPCLAB_SEED")
    return int(env) if env not in (None, "") else int(default)
