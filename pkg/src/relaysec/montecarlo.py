"""Monte Carlo oracle for the ESSR, the helpers' power outage and the lemma expectations.

Blocks are simulated in fixed chunks of 2^16.  Each chunk is reduced to
(count, mean, M2) and chunks are merged in index order, so a result depends
only on (seed, n) and never on the number of worker threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .analysis import power_outage_prob
from .stochastic import block_exponentials
from .system import (ChannelRealization, LinkStats, Scenario, SystemParams, derive_link_stats,
                     harvested_powers, instantaneous_secrecy_sum_rate, snr_triple)

CHUNK = 1 << 16
WORKERS_ENV = "RELAYSEC_WORKERS"

# stream ids inside a seed family
_CHANNEL_STREAM = 0
_EXPR_STREAMS = {"ln_x": 11, "ln_x_plus_c": 12, "ln_sum": 13, "inv_sum": 14,
                 "q_mean": 15, "gamma_r_log": 16}


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_blocks: int
    seed: int
    composition: str | None = None
    eps_mode: str | None = None


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _chunks(n: int) -> list[tuple[int, int]]:
    return [(s, min(CHUNK, n - s)) for s in range(0, n, CHUNK)]


def _merge(stats: Iterable[tuple[int, float, float]]) -> tuple[int, float, float]:
    # Chan et al. pairwise update, applied in chunk order
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        if nb == 0:
            continue
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def _chunk_stats(x: np.ndarray) -> tuple[int, float, float]:
    m = float(np.mean(x))
    return x.size, m, float(np.sum((x - m) ** 2))


def _run(n: int, per_chunk: Callable[[int, int], dict[str, np.ndarray]],
         workers: int | None) -> dict[str, tuple[int, float, float]]:
    jobs = _chunks(n)

    def task(job):
        vals = per_chunk(*job)
        return {k: _chunk_stats(v) for k, v in vals.items()}

    nw = min(worker_count(workers), len(jobs))
    if nw <= 1:
        results = [task(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(task, jobs))
    keys = results[0].keys()
    return {k: _merge(r[k] for r in results) for k in keys}


def _estimate(stat, seed, composition=None, eps_mode=None) -> McEstimate:
    n, mean, m2 = stat
    var = m2 / (n - 1) if n > 1 else 0.0
    return McEstimate(mean, math.sqrt(var / n), n, seed, composition, eps_mode)


def _channel_chunk(ls: LinkStats, seed: int, start: int, count: int) -> ChannelRealization:
    e = block_exponentials(seed, _CHANNEL_STREAM, start, count, 5)
    mus = np.array([ls.mu_s1r, ls.mu_s2r, ls.mu_s1j, ls.mu_s2j, ls.mu_rj])[:, None]
    return ChannelRealization.from_array(e * mus)


def block_rates(scenarios, real: ChannelRealization, ls: LinkStats,
                eps_mode: str = "exact") -> dict[Scenario, np.ndarray]:
    """Per-block instantaneous secrecy sum rate of each scenario, helpers active."""
    high = _high_snr(eps_mode)
    return {sc: instantaneous_secrecy_sum_rate(snr_triple(sc, real, ls, high), ls.alpha)
            for sc in scenarios}


def _high_snr(eps_mode: str) -> bool:
    if eps_mode not in ("exact", "high_snr"):
        raise ValueError(f"eps_mode must be 'exact' or 'high_snr', got {eps_mode!r}")
    return eps_mode == "high_snr"


def mc_essr_many(scenarios, params: SystemParams, n_blocks: int, seed: int = 0,
                 eps_mode: str = "exact", composition: str = "paper",
                 workers: int | None = None) -> dict[Scenario, McEstimate]:
    """ESSR estimates for several scenarios from one shared set of channel blocks.

    composition="paper": helper-active rates averaged over all blocks and
    mixed with the closed-form outage probabilities.
    composition="operational": each block applies the outage itself; no
    relay power means zero rate, no jammer power means the no-jamming rate.
    """
    if int(n_blocks) != n_blocks or n_blocks < 10_000:
        raise ValueError(f"n_blocks must be an integer >= 1e4, got {n_blocks}")
    if composition not in ("paper", "operational"):
        raise ValueError(f"composition must be 'paper' or 'operational', got {composition!r}")
    scs = [Scenario.parse(s) for s in scenarios]
    ls = derive_link_stats(params)
    high = _high_snr(eps_mode)
    need = set(scs) | ({Scenario.WOJ} if any(s is not Scenario.WOJ for s in scs) else set())
    p_r = power_outage_prob("relay", ls)
    p_j = power_outage_prob("jammer", ls)

    def per_chunk(start, count):
        real = _channel_chunk(ls, seed, start, count)
        rates = {sc: instantaneous_secrecy_sum_rate(snr_triple(sc, real, ls, high), ls.alpha)
                 for sc in need}
        out = {}
        if composition == "paper":
            for sc in scs:
                if sc is Scenario.WOJ:
                    out[sc.value] = (1 - p_r) * rates[sc]
                else:
                    out[sc.value] = (1 - p_r) * (p_j * rates[Scenario.WOJ] + (1 - p_j) * rates[sc])
        else:
            hp = harvested_powers(real, ls)
            relay_on = hp.p_r_recv >= ls.theta
            jam_on = hp.p_j_recv >= ls.theta
            for sc in scs:
                r = rates[sc] if sc is Scenario.WOJ else np.where(jam_on, rates[sc], rates[Scenario.WOJ])
                out[sc.value] = np.where(relay_on, r, 0.0)
        return out

    stats = _run(int(n_blocks), per_chunk, workers)
    return {sc: _estimate(stats[sc.value], seed, composition, eps_mode) for sc in scs}


def mc_essr(sc: Scenario, params: SystemParams, n_blocks: int, seed: int = 0,
            eps_mode: str = "exact", composition: str = "paper",
            workers: int | None = None) -> McEstimate:
    sc = Scenario.parse(sc)
    return mc_essr_many([sc], params, n_blocks, seed, eps_mode, composition, workers)[sc]


def _wilson_stderr(k: int, n: int, z: float = 1.0) -> float:
    p = k / n
    return z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))


def mc_power_outage(node: str, params: SystemParams, n: int, seed: int = 0,
                    workers: int | None = None) -> McEstimate:
    """Empirical Pr{received power < threshold} at the relay or the jammer."""
    if int(n) != n or n < 10_000:
        raise ValueError(f"n must be an integer >= 1e4, got {n}")
    if node not in ("relay", "jammer"):
        raise ValueError(f"node must be 'relay' or 'jammer', got {node!r}")
    ls = derive_link_stats(params)

    def per_chunk(start, count):
        hp = harvested_powers(_channel_chunk(ls, seed, start, count), ls)
        p = hp.p_r_recv if node == "relay" else hp.p_j_recv
        return {"out": (p < ls.theta).astype(float)}

    n_, mean, _ = _run(int(n), per_chunk, workers)["out"]
    k = int(round(mean * n_))
    return McEstimate(k / n_, _wilson_stderr(k, n_), n_, seed)


def mc_expectation(expr: str, means, n: int, seed: int = 0, c: float = 1.0,
                   workers: int | None = None) -> McEstimate:
    """Sample mean of a function of independent exponential variables.

    expr / means:
      ln_x        (m,)          ln X
      ln_x_plus_c (m,)          ln(X + c)
      ln_sum      (mx, my)      ln(X + cY)
      inv_sum     (mx, my)      1/(X + Y)       (means, i.e. 1/rate)
      q_mean      (mz, mw, mu)  1/((Z + W)U + 1)
      gamma_r_log (mx, my)      ln(1 + X + Y)
    """
    if expr not in _EXPR_STREAMS:
        raise ValueError(f"unknown expression {expr!r}")
    if int(n) != n or n < 100_000:
        raise ValueError(f"n must be an integer >= 1e5, got {n}")
    means = tuple(float(m) for m in np.atleast_1d(means))
    arity = {"ln_x": 1, "ln_x_plus_c": 1, "ln_sum": 2, "inv_sum": 2, "q_mean": 3, "gamma_r_log": 2}[expr]
    if len(means) != arity or min(means) <= 0:
        raise ValueError(f"{expr} needs {arity} positive means, got {means}")
    stream = _EXPR_STREAMS[expr]
    m = np.array(means)[:, None]

    def per_chunk(start, count):
        v = block_exponentials(seed, stream, start, count, arity) * m
        if expr == "ln_x":
            x = np.log(v[0])
        elif expr == "ln_x_plus_c":
            x = np.log(v[0] + c)
        elif expr == "ln_sum":
            x = np.log(v[0] + c * v[1])
        elif expr == "inv_sum":
            x = 1.0 / (v[0] + v[1])
        elif expr == "q_mean":
            x = 1.0 / ((v[0] + v[1]) * v[2] + 1.0)
        else:
            x = np.log1p(v[0] + v[1])
        return {"x": x}

    return _estimate(_run(int(n), per_chunk, workers)["x"], seed)
