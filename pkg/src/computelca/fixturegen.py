"""Deterministic generator for the shipped synthetic run logs.

Individual runs are made up. The generator places runs into cells of
(module, training phase, research phase, intensity bucket) whose counts
and compute totals are fixed below, so every published aggregate comes
out exactly. Run it as ``python -m computelca.fixturegen OUT_DIR`` to
rebuild the files byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from pathlib import Path

from .domain import ModuleKind as M
from .domain import ResearchPhaseKind as R
from .domain import RunPhaseKind
from .domain import TrainingPhaseKind as P
from .logs import RunLog, RunRecord, serialize_log

SEED = 20240917
PROJECT_START = datetime(2023, 11, 1, tzinfo=timezone.utc)
SAMPLE_STEP = 1800  # timeline grid, seconds

# GPU-second bounds of the default intensity buckets
BUCKET_EDGES_H = (0, 1, 24, 168, 730, 8760, 26280, 43800, 87600, 175200)

# Allowed GPU counts and typical wall-clock hours per bucket.
GPU_CHOICES = {
    0: (1, 2, 4, 8), 1: (1, 2, 4, 8), 2: (8, 16), 3: (8, 16, 32), 4: (16, 32, 64, 128),
    5: (64, 128, 256), 6: (128, 256, 384), 7: (256, 384, 512), 8: (384, 512),
}
HOURS = {0: (0.05, 1.0), 1: (0.5, 12.0), 2: (3.0, 24.0), 3: (8.0, 48.0), 4: (24.0, 168.0),
         5: (48.0, 240.0), 6: (72.0, 240.0), 7: (72.0, 240.0), 8: (72.0, 240.0)}

# day windows (from PROJECT_START) per (module, phase, research phase); None = any research phase
WINDOWS: dict[tuple, tuple[float, float]] = {
    (M.TOKENIZER, P.TRAIN, None): (0, 150),
    (M.TOKENIZER, P.TRAIN, R.ABLATION): (100, 160),
    (M.MAIN_MODEL, P.EXPERIMENTATION, None): (0, 120),
    (M.MAIN_MODEL, P.PRE_TRAINING, None): (60, 200),
    (M.MAIN_MODEL, P.PRE_TRAINING, R.ABLATION): (180, 250),
    (M.MAIN_MODEL, P.POST_TRAINING, None): (150, 250),
    (M.MAIN_MODEL, P.POST_TRAINING, R.ABLATION): (230, 262),
    (M.MAIN_MODEL, P.FINE_TUNING, None): (220, 270),
    (M.MAIN_MODEL, P.FINE_TUNING, R.ABLATION): (250, 270),
    (M.DATA_GENERATOR, P.EXPERIMENTATION, None): (90, 200),
    (M.DATA_GENERATOR, P.POST_TRAINING, None): (190, 250),
    (M.DATA_GENERATOR, P.FINE_TUNING, None): (240, 270),
    (M.LLM_BACKBONE, P.TRAIN, None): (0, 100),
}
FINAL_DAY = {
    (M.TOKENIZER, P.TRAIN): 140, (M.MAIN_MODEL, P.PRE_TRAINING): 192, (M.MAIN_MODEL, P.POST_TRAINING): 240,
    (M.MAIN_MODEL, P.FINE_TUNING): 262, (M.DATA_GENERATOR, P.POST_TRAINING): 245,
    (M.DATA_GENERATOR, P.FINE_TUNING): 265, (M.LLM_BACKBONE, P.TRAIN): 100,
}

# Run-phase targets over the non-LLM runs, GPU-h. Optimization takes the rest.
RUN_PHASE_TARGETS = {
    RunPhaseKind.VALIDATION: 78308.75,
    RunPhaseKind.EVALUATION: 160870.75,
    RunPhaseKind.SAMPLE_GENERATION: 41109.75,
}
BASE_FRACTION = {RunPhaseKind.VALIDATION: 0.028, RunPhaseKind.EVALUATION: 0.057,
                 RunPhaseKind.SAMPLE_GENERATION: 0.0146}


@dataclass(frozen=True)
class Cell:
    module: M
    phase: P
    research: R
    bucket: int
    n: int
    gpu_hours: int
    offset_gpu_s: int = 0  # sub-hour nudge so rounded bucket sums match

    @property
    def total_gpu_s(self) -> int:
        return self.gpu_hours * 3600 + self.offset_gpu_s


def _c(m, p, r, b, n, h, off=0) -> Cell:
    return Cell(m, p, r, b, n, h, off)


MX, MP, MQ, MF = ((M.MAIN_MODEL, x) for x in (P.EXPERIMENTATION, P.PRE_TRAINING, P.POST_TRAINING, P.FINE_TUNING))
DX, DQ, DF = ((M.DATA_GENERATOR, x) for x in (P.EXPERIMENTATION, P.POST_TRAINING, P.FINE_TUNING))
TK = (M.TOKENIZER, P.TRAIN)

CELLS: tuple[Cell, ...] = (
    # >= 5 GPU-years
    _c(*MP, R.FINAL_TRAINING, 7, 1, 44558),
    _c(*MP, R.DESIGN_AND_TUNING, 7, 8, 436710, -1200),
    _c(*MP, R.FAILED, 7, 2, 112418, 800),
    # 3-5 GPU-years
    _c(*MP, R.ABLATION, 6, 1, 30000),
    _c(*MP, R.DESIGN_AND_TUNING, 6, 6, 193913, -800),
    _c(*MQ, R.DESIGN_AND_TUNING, 6, 1, 29693, 1200),
    # 1-3 GPU-years
    _c(*MP, R.ABLATION, 5, 9, 117000),
    _c(*MP, R.DESIGN_AND_TUNING, 5, 11, 234229, -800),
    _c(*MQ, R.ABLATION, 5, 2, 24000),
    _c(*MQ, R.DESIGN_AND_TUNING, 5, 5, 64403, 800),
    _c(*MX, R.FAILED, 5, 3, 36000),
    _c(*DX, R.DESIGN_AND_TUNING, 5, 7, 69272),
    _c(*MX, R.DESIGN_AND_TUNING, 5, 12, 140000),
    # 1 GPU-month to 1 GPU-year
    _c(*MP, R.ABLATION, 4, 4, 20000),
    _c(*MP, R.DESIGN_AND_TUNING, 4, 8, 42031, -800),
    _c(*MQ, R.FINAL_TRAINING, 4, 1, 2634),
    _c(*MQ, R.ABLATION, 4, 8, 38000),
    _c(*MQ, R.DESIGN_AND_TUNING, 4, 36, 131280, 800),
    _c(*TK, R.FINAL_TRAINING, 4, 1, 1761),
    _c(*TK, R.DESIGN_AND_TUNING, 4, 35, 95418),
    _c(*DQ, R.FINAL_TRAINING, 4, 1, 2630),
    _c(*DQ, R.DESIGN_AND_TUNING, 4, 5, 10000),
    _c(*MX, R.FAILED, 4, 25, 45000),
    _c(*MP, R.FAILED, 4, 15, 30000),
    _c(*DX, R.FAILED, 4, 10, 16000),
    _c(*TK, R.FAILED, 4, 5, 8000),
    _c(*MQ, R.FAILED, 4, 5, 7285),
    _c(*MX, R.DEBUGGING, 4, 20, 64116),
    _c(*DX, R.DESIGN_AND_TUNING, 4, 80, 198164),
    _c(*MX, R.DESIGN_AND_TUNING, 4, 137, 272313),
    # 1 GPU-week to 1 GPU-month
    _c(*MQ, R.DESIGN_AND_TUNING, 3, 6, 2713, 800),
    _c(*MF, R.FINAL_TRAINING, 3, 1, 570),
    _c(*MF, R.DESIGN_AND_TUNING, 3, 15, 8849),
    _c(*TK, R.ABLATION, 3, 75, 40000),
    _c(*TK, R.DESIGN_AND_TUNING, 3, 60, 24000),
    _c(*DQ, R.DESIGN_AND_TUNING, 3, 30, 12255),
    _c(*MX, R.FAILED, 3, 100, 30000, -800),
    _c(*MQ, R.FAILED, 3, 40, 12000),
    _c(*MF, R.FAILED, 3, 30, 9000),
    _c(*DX, R.FAILED, 3, 40, 12000),
    _c(*TK, R.FAILED, 3, 30, 9000),
    _c(*MX, R.DEBUGGING, 3, 30, 7500),
    _c(*DX, R.DESIGN_AND_TUNING, 3, 34, 20000),
    _c(*MX, R.DESIGN_AND_TUNING, 3, 60, 26764),
    # 1 GPU-day to 1 GPU-week
    _c(*MF, R.ABLATION, 2, 10, 1200),
    _c(*MF, R.DESIGN_AND_TUNING, 2, 120, 15301),
    _c(*DF, R.FINAL_TRAINING, 2, 1, 33),
    _c(*DF, R.DESIGN_AND_TUNING, 2, 3, 300),
    _c(*TK, R.ABLATION, 2, 30, 3408),
    _c(*TK, R.DESIGN_AND_TUNING, 2, 150, 15000),
    _c(*MX, R.FAILED, 2, 200, 10000),
    _c(*MF, R.FAILED, 2, 100, 4500),
    _c(*TK, R.FAILED, 2, 100, 4500),
    _c(*DX, R.FAILED, 2, 66, 3500),
    _c(*MX, R.DEBUGGING, 2, 100, 4500),
    _c(*DX, R.DEBUGGING, 2, 34, 1500),
    _c(*DX, R.DESIGN_AND_TUNING, 2, 34, 4000),
    _c(*MX, R.DESIGN_AND_TUNING, 2, 80, 8139),
    # 1 GPU-hour to 1 GPU-day
    _c(*MF, R.DESIGN_AND_TUNING, 1, 150, 2076),
    _c(*DF, R.DESIGN_AND_TUNING, 1, 10, 69),
    _c(*TK, R.DESIGN_AND_TUNING, 1, 200, 2000),
    _c(*MX, R.FAILED, 1, 150, 900),
    _c(*MF, R.FAILED, 1, 100, 600),
    _c(*TK, R.FAILED, 1, 78, 468),
    _c(*DX, R.FAILED, 1, 50, 300),
    _c(*MX, R.DEBUGGING, 1, 100, 800),
    _c(*TK, R.DEBUGGING, 1, 50, 400),
    _c(*MX, R.DESIGN_AND_TUNING, 1, 60, 1039),
    # under 1 GPU-hour
    _c(*MX, R.FAILED, 0, 150, 70),
    _c(*TK, R.FAILED, 0, 100, 45),
    _c(*DX, R.FAILED, 0, 80, 35),
    _c(*MX, R.DEBUGGING, 0, 193, 90),
    _c(*TK, R.DESIGN_AND_TUNING, 0, 20, 10),
)

# (research phase, GPU-h, GPUs) for the separately shipped LLM-backbone runs
LLM_RUNS = ((R.DESIGN_AND_TUNING, 372000, 960), (R.FINAL_TRAINING, 68000, 512))


def _bucket_of(gpu_s: int) -> int:
    h = gpu_s / 3600
    for i, hi in enumerate(BUCKET_EDGES_H[1:]):
        if h < hi:
            return i
    raise ValueError(gpu_s)


class _Rng:
    """Draws built only on ``random.random`` so older and newer Pythons agree."""

    def __init__(self, seed: int) -> None:
        self._r = random.Random(seed)

    def u(self, a: float = 0.0, b: float = 1.0) -> float:
        return a + (b - a) * self._r.random()

    def log_u(self, a: float, b: float) -> float:
        return math.exp(self.u(math.log(a), math.log(b)))

    def normal(self) -> float:
        u1 = 1.0 - self._r.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * self._r.random())

    def int_below(self, n: int) -> int:
        return min(int(self._r.random() * n), n - 1)


def _partition(rng: _Rng, cell: Cell) -> list[float]:
    """Split the cell total into n targets inside the bucket, skewed like real runs."""
    lo_h, hi_h = BUCKET_EDGES_H[cell.bucket], BUCKET_EDGES_H[cell.bucket + 1]
    lo, hi = lo_h * 3600.0, hi_h * 3600.0
    margin = max(0.002 * (hi - lo), 30.0 if cell.bucket == 0 else 600.0)
    lo, hi = max(lo, 1.0) + margin, hi - margin
    total = float(cell.total_gpu_s)
    if not cell.n * lo <= total <= cell.n * hi:
        raise ValueError(f"cell {cell} cannot fit its bucket")
    w = [math.exp(0.7 * rng.normal()) for _ in range(cell.n)]
    x = [lo + (total - cell.n * lo) * wi / sum(w) for wi in w]
    for _ in range(100):  # water-fill the overflow into runs with room
        excess = sum(max(0.0, xi - hi) for xi in x)
        if excess <= 1e-6:
            break
        x = [min(xi, hi) for xi in x]
        room = [hi - xi for xi in x]
        x = [xi + excess * ri / sum(room) for xi, ri in zip(x, room)]
    return x


def _pick_gpus(rng: _Rng, bucket: int, gpu_s: float) -> int:
    hours = rng.log_u(*HOURS[bucket])
    ideal = gpu_s / 3600.0 / hours
    return min(GPU_CHOICES[bucket], key=lambda g: abs(math.log(g / ideal)))


def _single(rng: _Rng, cell: Cell) -> list[tuple[int, int]]:
    total = cell.total_gpu_s
    lo_g, hi_g = min(GPU_CHOICES[cell.bucket]), max(GPU_CHOICES[cell.bucket])
    ideal = total / 3600.0 / math.sqrt(HOURS[cell.bucket][0] * HOURS[cell.bucket][1])
    options = [g for g in range(8, 1025, 8) if lo_g <= g <= hi_g and total % g == 0]
    if not options:
        raise ValueError(f"no GPU count divides cell {cell}")
    g = min(options, key=lambda g: abs(math.log(g / ideal)))
    return [(g, total // g)]


def _runs_for_cell(rng: _Rng, cell: Cell) -> list[tuple[int, int]]:
    """(gpus, seconds) per run with exact integer GPU-second total."""
    if cell.n == 1 and cell.bucket >= 2:
        return _single(rng, cell)
    targets = _partition(rng, cell)
    gpus = [_pick_gpus(rng, cell.bucket, x) for x in targets]
    small = cell.bucket <= 1
    if small:
        gpus[-1] = 1
    else:
        gpus[-1] = gpus[-2] + 8  # gcd(g, g + 8) = 8 lets the pair absorb any residual
    secs: list[int] = []
    carry = 0.0
    for x, g in zip(targets[:-1], gpus[:-1]):
        s = max(1, round((x + carry) / g))
        carry += x - s * g
        secs.append(s)
    rest = cell.total_gpu_s - sum(s * g for s, g in zip(secs, gpus))
    if small:
        secs.append(rest)
    else:
        gb = gpus[-1]
        sb = round(rest / gb) if cell.n == 2 else round((targets[-1] + carry) / gb)
        r2 = rest - sb * gb
        # r2 is a multiple of 8; move r2/8 seconds from one run of the pair to the other
        q = r2 // 8
        secs[-1] -= q
        secs.append(sb + q)
    runs = list(zip(gpus, secs))
    if sum(g * s for g, s in runs) != cell.total_gpu_s:
        raise AssertionError(f"cell {cell} does not sum")
    for g, s in runs:
        if s < 1 or _bucket_of(g * s) != cell.bucket:
            raise AssertionError(f"run {g}x{s}s falls outside bucket {cell.bucket} of {cell}")
    return runs


def _window(module: M, phase: P, research: R) -> tuple[float, float]:
    return WINDOWS.get((module, phase, research)) or WINDOWS[(module, phase, None)]


@dataclass
class _Draft:
    module: M
    phase: P
    research: R
    gpus: int
    seconds: int
    start: int  # seconds after PROJECT_START
    weights: dict


def _fraction_weights(rng: _Rng, module: M, research: R) -> dict:
    w = {RunPhaseKind.VALIDATION: BASE_FRACTION[RunPhaseKind.VALIDATION] * rng.u(0.5, 1.5)}
    if research is R.FAILED and rng.u() < 0.5:
        w[RunPhaseKind.EVALUATION] = 0.0
    else:
        w[RunPhaseKind.EVALUATION] = BASE_FRACTION[RunPhaseKind.EVALUATION] * rng.u(0.3, 1.7)
    speaks = module in (M.MAIN_MODEL, M.DATA_GENERATOR)
    w[RunPhaseKind.SAMPLE_GENERATION] = BASE_FRACTION[RunPhaseKind.SAMPLE_GENERATION] * rng.u(0.5, 1.5) if speaks \
        else 0.0
    return w


def _snap_starts(drafts: list[_Draft]) -> None:
    """Pick each start's offset inside its half-hour so timeline rounding errors cancel.

    A run of duration d = q*step + rho covers q+1 grid samples when its
    start sits less than rho before a grid point, q otherwise. Choosing
    greedily, largest runs first, keeps the accumulated error of the
    sampled integral below one step times the largest GPU count.
    """
    first = min(range(len(drafts)), key=lambda i: drafts[i].start)
    drafts[first].start = 0
    order = sorted((i for i in range(len(drafts)) if i != first), key=lambda i: (-drafts[i].gpus, i))
    rho0 = drafts[first].seconds % SAMPLE_STEP
    err = drafts[first].gpus * ((SAMPLE_STEP - rho0) if rho0 else 0)
    for i in order:
        d = drafts[i]
        rho = d.seconds % SAMPLE_STEP
        k = max(1, -(-d.start // SAMPLE_STEP))
        if rho == 0:
            u = 0
        elif err > 0:
            u = rho + (d.start % (SAMPLE_STEP - rho))  # covers q samples: error -g*rho
            err -= d.gpus * rho
        else:
            u = d.start % rho  # covers q+1 samples: error g*(step - rho)
            err += d.gpus * (SAMPLE_STEP - rho)
        d.start = k * SAMPLE_STEP - u


def _fractions(drafts: list[_Draft], counted: list[bool]) -> list[dict]:
    sums = {k: math.fsum(d.weights[k] * d.gpus * d.seconds / 3600.0 for d, c in zip(drafts, counted) if c)
            for k in RUN_PHASE_TARGETS}
    scale = {k: RUN_PHASE_TARGETS[k] / sums[k] for k in RUN_PHASE_TARGETS}
    out = []
    for d in drafts:
        fr = {k: Decimal(repr(round(d.weights[k] * scale[k], 9))) for k in RUN_PHASE_TARGETS}
        opt = Decimal(1) - sum(fr.values())
        row = {RunPhaseKind.OPTIMIZATION: float(opt)}
        row.update({k: float(v) for k, v in fr.items()})
        out.append(row)
    return out


def _records(drafts: list[_Draft], fractions: list[dict], prefix: str) -> list[RunRecord]:
    order = sorted(range(len(drafts)), key=lambda i: (drafts[i].start, -drafts[i].gpus, drafts[i].seconds, i))
    recs = []
    for n, i in enumerate(order, start=1):
        d = drafts[i]
        start = PROJECT_START + timedelta(seconds=d.start)
        recs.append(RunRecord(f"{prefix}{n:05d}", d.module, d.phase, d.research, start,
                              start + timedelta(seconds=d.seconds), d.gpus, fractions[i]))
    return recs


def generate(seed: int = SEED) -> tuple[RunLog, RunLog]:
    """Return (main log, LLM-backbone log)."""
    rng = _Rng(seed)
    drafts: list[_Draft] = []
    for cell in CELLS:
        lo, hi = _window(cell.module, cell.phase, cell.research)
        for g, s in _runs_for_cell(rng, cell):
            if cell.research is R.FINAL_TRAINING:
                start = int(FINAL_DAY[(cell.module, cell.phase)] * 86400 + rng.u(0, 86400))
            else:
                start = int(rng.u(lo, hi) * 86400)
            drafts.append(_Draft(cell.module, cell.phase, cell.research, g, s, start,
                                 _fraction_weights(rng, cell.module, cell.research)))
    _snap_starts(drafts)
    main_fr = _fractions(drafts, [True] * len(drafts))

    llm: list[_Draft] = []
    for research, hours, g in LLM_RUNS:
        day = FINAL_DAY[(M.LLM_BACKBONE, P.TRAIN)] if research is R.FINAL_TRAINING else rng.u(10, 60)
        llm.append(_Draft(M.LLM_BACKBONE, P.TRAIN, research, g, hours * 3600 // g, int(day * 86400),
                          _fraction_weights(rng, M.MAIN_MODEL, research)))
    llm_fr = [{RunPhaseKind.OPTIMIZATION: 1.0 - sum(BASE_FRACTION.values()), **BASE_FRACTION} for _ in llm]
    return (RunLog(tuple(_records(drafts, main_fr, "run-")), "runs.log"),
            RunLog(tuple(_records(llm, llm_fr, "llm-backbone-")), "llm_backbone.log"))


def manifest(main: RunLog, llm: RunLog, files: dict[str, bytes]) -> dict:
    from .logs import run_compute

    def total(log: RunLog) -> float:
        return math.fsum(run_compute(r).gpu_hours for r in log.runs)

    return {
        "generator": "computelca.fixturegen",
        "seed": SEED,
        "files": {
            name: {"runs": len(log.runs), "total_gpu_hours": total(log), "sha256": hashlib.sha256(data).hexdigest()}
            for (name, data), log in zip(files.items(), (main, llm))
        },
    }


def write_fixtures(out_dir: str | Path, seed: int = SEED) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    main, llm = generate(seed)
    files = {"runs.log": serialize_log(main), "llm_backbone.log": serialize_log(llm)}
    paths = {}
    for name, data in files.items():
        (out / name).write_bytes(data)
        paths[name] = out / name
    (out / "manifest.json").write_text(json.dumps(manifest(main, llm, files), indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    paths["manifest.json"] = out / "manifest.json"
    return paths


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="python -m computelca.fixturegen", description=__doc__)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--seed", type=int, default=SEED)
    args = ap.parse_args(argv)
    for p in write_fixtures(args.out_dir, args.seed).values():
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
