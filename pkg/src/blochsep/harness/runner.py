"""Deterministic, resumable, parallel sampling runs.

Sample ``i`` of a run always comes from block ``i // BLOCK`` (its own RNG
stream, keyed by the block index) at position ``i % BLOCK``.  The merged
counters therefore depend only on ``(measure, seed, n)``: not on the worker
count, the checkpoint interval, or where a run was interrupted.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from blochsep import measures, stats

BLOCK = 1 << 16
FORMAT_VERSION = 1
KIND = "blochsep-checkpoint"


class ConfigError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    measure: measures.MeasureSpec
    n_samples: int
    base_seed: int = 0
    n_workers: int = 1
    checkpoint_every: int = 16 * BLOCK
    out_path: Path | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.n_workers < 1:
            raise ConfigError("n_workers must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def checkpoint_stride(self) -> int:
        """Checkpoint interval rounded up to whole blocks."""
        return -(-self.checkpoint_every // BLOCK) * BLOCK


# ---------------------------------------------------------------------------
# sampling


def block_states(spec: measures.MeasureSpec, seed: int, block: int) -> np.ndarray:
    return measures.sample_batch(spec, measures.RngStream(seed, block), BLOCK)


def sample_range(label: str, seed: int, start: int, stop: int) -> stats.JointHistogram:
    """Counters for samples ``start <= i < stop`` of the run."""
    spec = measures.MeasureSpec.parse(label)
    hist = stats.JointHistogram.empty(label, seed)
    i = start
    while i < stop:
        block, offset = divmod(i, BLOCK)
        take = min(stop - i, BLOCK - offset)
        rho = block_states(spec, seed, block)
        hist.add_states(rho[offset:offset + take])
        i += take
    return hist


def _split(start: int, stop: int, parts: int) -> list[tuple[int, int]]:
    # block-aligned cuts so no block is generated twice
    first, last = start // BLOCK, -(-stop // BLOCK)
    nblocks = last - first
    parts = max(1, min(parts, nblocks))
    cuts = [start] + [(first + (nblocks * k) // parts) * BLOCK for k in range(1, parts)] + [stop]
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def sample_parallel(label: str, seed: int, start: int, stop: int, workers: int,
                    pool: ProcessPoolExecutor | None = None) -> stats.JointHistogram:
    pieces = _split(start, stop, workers)
    if workers == 1 or len(pieces) == 1:
        parts = [sample_range(label, seed, a, b) for a, b in pieces]
    elif pool is not None:
        parts = list(pool.map(sample_range, *zip(*[(label, seed, a, b) for a, b in pieces])))
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(sample_range, *zip(*[(label, seed, a, b) for a, b in pieces])))
    out = stats.JointHistogram.empty(label, seed)
    for p in parts:  # single-threaded merge after the joins
        out = out.merge(p)
    return out


def extend(hist: stats.JointHistogram, n_target: int, workers: int = 1,
           checkpoint_every: int | None = None, out_path: Path | None = None,
           progress: bool = False) -> stats.JointHistogram:
    """Continue a run to ``n_target`` samples, checkpointing along the way."""
    if hist.base_seed is None:
        raise ConfigError("cannot extend a merged histogram without a single seed")
    stride = n_target if not checkpoint_every else -(-checkpoint_every // BLOCK) * BLOCK
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while hist.n_samples < n_target:
            start = hist.n_samples
            # checkpoint boundaries sit on multiples of the stride
            stop = min(n_target, (start // stride + 1) * stride)
            part = sample_parallel(hist.measure, hist.base_seed, start, stop, workers, pool)
            hist = hist.merge(part)
            if out_path is not None:
                save_checkpoint(hist, out_path, workers)
            if progress:
                print(f"{hist.measure}: {hist.n_samples}/{n_target} samples", file=sys.stderr)
    finally:
        if pool is not None:
            pool.shutdown()
    return hist


def run(config: RunConfig, resume: Path | None = None, progress: bool = False) -> stats.JointHistogram:
    """Run (or resume) a sampling job and write its checkpoint."""
    label = config.measure.label
    if resume is not None:
        hist = load_checkpoint(resume)
        if hist.measure != label:
            raise ConfigError(f"checkpoint is for {hist.measure!r}, not {label!r}")
        if hist.base_seed != config.base_seed:
            raise ConfigError(f"checkpoint seed {hist.base_seed} differs from {config.base_seed}")
    else:
        hist = stats.JointHistogram.empty(label, config.base_seed)
    hist = extend(hist, config.n_samples, config.n_workers, config.checkpoint_stride,
                  config.out_path, progress)
    if config.out_path is not None:
        # also covers a resume that had nothing left to do
        save_checkpoint(hist, config.out_path, config.n_workers)
    return hist


# ---------------------------------------------------------------------------
# checkpoints


def to_payload(hist: stats.JointHistogram, n_workers: int = 1) -> dict:
    def grid(a):
        return [[int(x) for x in row] for row in a]

    def moments(m):
        return [str(v) for v in m.as_list()]

    return {
        "format_version": FORMAT_VERSION,
        "kind": KIND,
        "measure": hist.measure,
        "base_seed": hist.base_seed,
        "n_workers": n_workers,
        "block_size": BLOCK,
        "samples_done": hist.n_samples,
        "pd_max": hist.pd_max,
        "histogram": {
            "total": grid(hist.total),
            "sep": grid(hist.sep),
            "sep_pt_dom": grid(hist.sep_pt_dom),
            "prod_dist": grid(hist.prod_dist),
            "mzz": grid(hist.mzz),
        },
        "moments": {
            "bits": hist.moments_all.bits,
            "all": moments(hist.moments_all),
            "sep": moments(hist.moments_sep),
        },
        "diagnostics": {
            "n_boundary": hist.n_boundary,
            "max_abs_det_rho": hist.max_abs_det_rho,
        },
    }


def from_payload(data: dict) -> stats.JointHistogram:
    if data.get("kind") != KIND:
        raise CheckpointError("not a checkpoint file")
    if data.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {data.get('format_version')}")
    if data.get("block_size") != BLOCK:
        raise CheckpointError("checkpoint was written with a different block size")
    h = data["histogram"]
    m = data["moments"]

    def grid(rows, shape):
        a = np.array(rows, dtype=np.int64).reshape(shape)
        return np.ascontiguousarray(a)

    def moments(vals):
        out = stats.Moments(bits=int(m["bits"]))
        out.add([int(v) for v in vals])
        return out

    nb = stats.NBINS
    hist = stats.JointHistogram(
        measure=data["measure"],
        base_seed=data["base_seed"],
        total=grid(h["total"], (nb, nb)),
        sep=grid(h["sep"], (nb, nb)),
        sep_pt_dom=grid(h["sep_pt_dom"], (nb, nb)),
        prod_dist=grid(h["prod_dist"], (nb, 2)),
        mzz=grid(h["mzz"], (nb, 2)),
        moments_all=moments(m["all"]),
        moments_sep=moments(m["sep"]),
        n_samples=int(data["samples_done"]),
        n_boundary=int(data["diagnostics"]["n_boundary"]),
        max_abs_det_rho=float(data["diagnostics"]["max_abs_det_rho"]),
        pd_max=float(data["pd_max"]),
    )
    if int(hist.total.sum()) != hist.n_samples or hist.moments_all.n != hist.n_samples:
        raise CheckpointError("counters disagree with samples_done")
    return hist


def dumps(hist: stats.JointHistogram, n_workers: int = 1) -> str:
    return json.dumps(to_payload(hist, n_workers), sort_keys=True, separators=(",", ":")) + "\n"


def save_checkpoint(hist: stats.JointHistogram, path, n_workers: int = 1) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w") as f:
            f.write(dumps(hist, n_workers))
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> stats.JointHistogram:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path} is not valid JSON: {exc}") from exc
    return from_payload(data)
