"""End-to-end pipeline: build, add noise, sample, decode, count failures.

A :class:`PointConfig` names one circuit at one physical error rate. Shots
are drawn in fixed-size batches whose random streams depend only on the
seed, the configuration and the batch index, and a point stops after the
first batch that reaches the failure cap or the shot cap. Results are
therefore identical whatever the number of worker processes.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import lru_cache

from . import decoder, dem, noise, sampler
from .analysis import FailurePoint, combine_points
from .builders import SchemeSpec, build, relaxation_detectors
from .circuit import CircuitProgram
from .layout import memory_patch, stability_patch

SCHEMES = ("ur", "cr", "nr")
DEFAULT_MAX_FAILURES = 100
DEFAULT_MAX_SHOTS = 10_000_000
DEFAULT_BATCH = 20_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PointConfig:
    experiment: str
    family: str
    scheme: str
    size: int
    p: float
    rounds: int
    t_res: int = 500
    basis: str = "Z"

    def __post_init__(self):
        if self.experiment not in ("memory", "stability"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; use one of {SCHEMES}")
        if not 0 < self.p < 0.1:
            raise ConfigError("p must lie in (0, 0.1)")
        if self.basis not in ("X", "Z"):
            raise ConfigError("basis must be X or Z")
        try:
            self.spec()
            self.patch()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def spec(self) -> SchemeSpec:
        return SchemeSpec(self.family, self.scheme.upper(), self.rounds, self.experiment, self.t_res)

    def patch(self):
        if self.experiment == "memory":
            return memory_patch(self.size, self.family, self.basis)
        return stability_patch(self.size, self.family)

    def key(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def program_for(cfg: PointConfig) -> CircuitProgram:
    return build(cfg.patch(), cfg.spec())


@lru_cache(maxsize=64)
def _prepared(cfg: PointConfig):
    noisy = noise.apply(program_for(cfg), noise.NoiseModel(cfg.p))
    graph = decoder.build_graph(dem.decompose(dem.extract(noisy)))
    return noisy, graph


def detector_model(cfg: PointConfig) -> dem.DetectorErrorModel:
    return dem.decompose(dem.extract(_prepared(cfg)[0]))


def _stream_seed(seed: int, cfg: PointConfig) -> int:
    digest = hashlib.sha256(f"{seed}|{cfg.key()}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def count_failures(cfg: PointConfig, seed: int, max_failures: int = DEFAULT_MAX_FAILURES,
                   max_shots: int = DEFAULT_MAX_SHOTS, batch: int = DEFAULT_BATCH) -> tuple[int, int]:
    """Decode batches until ``max_failures`` failures or ``max_shots`` shots."""
    if max_shots < 1 or max_failures < 1 or batch < 1:
        raise ConfigError("shot caps and batch size must be positive")
    noisy, graph = _prepared(cfg)
    stream = _stream_seed(seed, cfg)
    failures = shots = 0
    index = 0
    while shots < max_shots and failures < max_failures:
        n = min(batch, max_shots - shots)
        block = sampler.sample(noisy, n, seed=stream, batch_shots=batch, first_batch=index)
        f, s = decoder.decode_batch(graph, block)
        failures += f
        shots += s
        index += 1
    return failures, shots


def run_point(cfg: PointConfig, seed: int, max_failures: int = DEFAULT_MAX_FAILURES,
              max_shots: int = DEFAULT_MAX_SHOTS, batch: int = DEFAULT_BATCH) -> FailurePoint:
    """Failure point for one configuration; memory runs both bases and combines."""
    def single(c):
        f, s = count_failures(c, seed, max_failures, max_shots, batch)
        return FailurePoint(c.experiment, c.family, c.scheme, c.size, c.p, c.rounds, c.t_res, s, f)

    if cfg.experiment == "stability":
        return single(cfg)
    return combine_points(single(replace(cfg, basis="X")), single(replace(cfg, basis="Z")))


def _run_star(args):
    return run_point(*args)


def run_points(configs, seed: int, max_failures: int = DEFAULT_MAX_FAILURES,
               max_shots: int = DEFAULT_MAX_SHOTS, workers: int = 1,
               batch: int = DEFAULT_BATCH) -> list[FailurePoint]:
    """Run many points, optionally across processes; output order follows input."""
    jobs = [(c, seed, max_failures, max_shots, batch) for c in configs]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_star, jobs))


def round_duration(cfg: PointConfig) -> int:
    return program_for(cfg).round_duration_ns


def effective_distance(cfg: PointConfig, node_budget: int = 20_000_000) -> dem.DistanceResult:
    """Circuit-level distance; for memory the smaller of the two bases."""
    bases = ("X", "Z") if cfg.experiment == "memory" else (cfg.basis,)
    results = []
    for b in bases:
        c = replace(cfg, basis=b)
        prog = program_for(c)
        model = dem.decompose(dem.extract(noise.apply(prog, noise.NoiseModel(1e-3))))
        results.append(dem.distance(model, relaxation=relaxation_detectors(prog),
                                    node_budget=node_budget))
    exact = [r for r in results if r.exact]
    if len(exact) == len(results):
        return min(results, key=lambda r: r.value)
    bound = min(r.value if r.exact else r.lower_bound for r in results)
    return dem.DistanceResult(None, bound, False)
