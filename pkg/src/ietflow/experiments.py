"""Monte Carlo harness: invariant histograms, correlation decay, return
times, good-word statistics, and the empirical CLT for the suspension flow.

Every randomized entry point takes an explicit seed; replicas draw from
numbered substreams and merge in stream order, so identical (seed, config)
pairs give bit-identical results regardless of worker count.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import density, induction, rauzy, zippered
from .errors import BoundaryError
from ._kernels import OBS_COORD, OBS_HEIGHT, kernels, perm_array
from .iet import IETState
from .induction import Letter, Word
from .rauzy import Perm

RNG_ALGORITHM = "numpy PCG64 via SeedSequence(seed, stream_id)"


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Reproducible, independent-by-stream-id generator."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed), int(stream_id)))))


@dataclass
class RunResult:
    """Outcome of one experiment: config echo, payload, provenance."""

    command: str
    seed: int
    config: dict
    payload: dict
    wall_time: float
    rng_algorithm: str = RNG_ALGORITHM

    def config_hash(self) -> str:
        blob = json.dumps({"command": self.command, "seed": self.seed, "config": self.config},
                          sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "rng_algorithm": self.rng_algorithm,
            "config_hash": self.config_hash(),
            "wall_time_s": round(self.wall_time, 3),
        }


@dataclass(frozen=True)
class ObservableSpec:
    """Scalar observable of the renormalization state.

    ``coord`` picks the raw length coordinate recorded by the orbit
    kernels; ``transform`` maps that coordinate series to observable
    values (vectorized).  alpha and c_estimate document the Hölder class.
    """

    name: str
    coord: int
    transform: Callable[[np.ndarray], np.ndarray]
    alpha: float
    c_estimate: float

    def __call__(self, series: np.ndarray) -> np.ndarray:
        return self.transform(series)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def bump_transform(lo: float, hi: float, w: float):
    def f(x):
        return _smoothstep((x - lo) / w) * _smoothstep((hi - x) / w)

    return f


OBSERVABLES = {
    "coord1": ObservableSpec("coord1", 0, lambda x: x, alpha=1.0, c_estimate=1.0),
    "log-coord1": ObservableSpec("log-coord1", 0, np.log, alpha=1.0, c_estimate=1.0),
    "bump": ObservableSpec("bump", 0, bump_transform(0.55, 0.75, 0.05), alpha=1.0, c_estimate=30.0),
}


def empirical_holder(obs: ObservableSpec, m: int, n_pairs: int, rng) -> float:
    """Sampled sup of |phi(x)-phi(y)| / d(x,y)^alpha over pairs at distance <= 1."""
    from .projective import hilbert_distance

    worst = 0.0
    for _ in range(n_pairs):
        u = rng.dirichlet(np.ones(m))
        v = u * np.exp(rng.uniform(-0.4, 0.4, size=m))
        v = v / v.sum()
        d = hilbert_distance(u, v)
        if d == 0.0 or d > 1.0:
            continue
        fu = float(obs.transform(np.array([u[obs.coord]]))[0])
        fv = float(obs.transform(np.array([v[obs.coord]]))[0])
        worst = max(worst, abs(fu - fv) / d**obs.alpha)
    return worst


# ---------------------------------------------------------------------------
# start sampling
# ---------------------------------------------------------------------------

def _random_start(m: int, rng) -> np.ndarray:
    lam = rng.dirichlet(np.ones(m))
    return np.asarray(lam, dtype=float)


def _run_with_resample(fn, m, seed, max_tries=64):
    """Re-draw the Lebesgue start if the orbit hits the boundary set."""
    for attempt in range(max_tries):
        rng = rng_stream(seed, 1000 + attempt)
        out = fn(_random_start(m, rng))
        if out is not None:
            return out
    raise RuntimeError("all starts hit the boundary set; numerically degenerate setup")


# ---------------------------------------------------------------------------
# invariant measure histogram
# ---------------------------------------------------------------------------

def sample_invariant(perm: Perm, burn_in: int, n_steps: int, bins: int, seed: int) -> RunResult:
    """Histogram of lambda_1 along the accelerated orbit vs the exact density.

    The exact comparison integrates the normalized cone-volume profile per
    bin (only meaningful for m = 2, where lambda_1 determines the state;
    for larger m the histogram is reported without a reference curve).
    """
    t0 = time.time()
    perm = rauzy.check_irreducible(perm)
    m = len(perm)

    def attempt(lam0):
        lam = lam0.copy()
        p = perm_array(perm)
        inv = np.empty(m, dtype=np.int64)
        for j in range(m):
            inv[p[j]] = j
        counts, done, status = kernels.invariant_hist(lam, p, inv, burn_in, n_steps, bins)
        if status != 0 or done < n_steps:
            return None
        return counts

    counts = _run_with_resample(attempt, m, seed)
    masses = counts / counts.sum()
    payload = {"bins": bins, "counts": counts.tolist(), "masses": masses.tolist()}
    if m == 2:
        expected = _expected_bin_masses_m2(perm, bins)
        rel_dev = np.abs(masses - expected) / expected
        payload["expected"] = expected.tolist()
        payload["sup_rel_deviation"] = float(rel_dev.max())
    cfg = {"perm": rauzy.perm_str(perm), "burn_in": burn_in, "n_steps": n_steps, "bins": bins}
    return RunResult("invariant-hist", seed, cfg, payload, time.time() - t0)


def _expected_bin_masses_m2(perm: Perm, bins: int) -> np.ndarray:
    """Per-bin mass of the exact invariant density profile (Simpson per bin)."""

    def profile(x):
        lam = np.array([x, 1.0 - x])
        if x > 0.5:
            return density.r_minus(lam, perm)
        if x < 0.5:
            return density.r_plus(lam, perm)
        return density.r_minus(lam, perm)  # measure-zero tie: either branch

    edges = np.linspace(0.0, 1.0, bins + 1)
    masses = np.empty(bins)
    nodes = 16
    for i in range(bins):
        xs = np.linspace(edges[i], edges[i + 1], nodes + 1)
        xs = np.clip(xs, 1e-12, 1 - 1e-12)
        ys = np.array([profile(x) for x in xs])
        masses[i] = float(np.trapezoid(ys, xs))
    return masses / masses.sum()


# ---------------------------------------------------------------------------
# correlation decay under the squared accelerated map
# ---------------------------------------------------------------------------

def correlation_decay(
    phi: ObservableSpec,
    psi: ObservableSpec,
    perm: Perm,
    n_max: int,
    n_samples: int,
    seed: int,
    replicas: int = 32,
    burn_in: int = 10_000,
    threads: int = 1,
) -> RunResult:
    """Covariance of phi and psi composed with the 2n-th accelerated iterate.

    One long orbit's worth of samples split over independent replicas; the
    point estimate averages the replica estimates, the bootstrap stderr is
    the replica spread.  The chain stays on the plus side (stride 2).
    """
    t0 = time.time()
    perm = rauzy.check_irreducible(perm)
    m = len(perm)
    per_rep = n_samples // replicas
    if per_rep <= n_max + 1:
        raise ValueError("n_samples too small for the requested replica count / n_max")

    def one_replica(rep):
        def attempt(lam0):
            lam = lam0.copy()
            p = perm_array(perm)
            inv = np.empty(m, dtype=np.int64)
            for j in range(m):
                inv[p[j]] = j
            s1, s2, done, status = kernels.orbit_coord_series(
                lam, p, inv, burn_in, per_rep, 2, phi.coord, psi.coord
            )
            if status != 0 or done < per_rep:
                return None
            return s1, s2

        s1, s2 = _run_with_resample(attempt, m, seed * 131 + rep)
        x = phi(s1)
        y = psi(s2)
        return _cross_covariance(x, y, n_max)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(one_replica, range(replicas)))
    else:
        reps = [one_replica(r) for r in range(replicas)]
    reps = np.array(reps)  # (replicas, n_max+1), merge order fixed by index
    estimate = reps.mean(axis=0)
    stderr = reps.std(axis=0, ddof=1) / np.sqrt(replicas)
    payload = {
        "n": list(range(n_max + 1)),
        "estimate": estimate.tolist(),
        "stderr": stderr.tolist(),
    }
    cfg = {
        "phi": phi.name, "psi": psi.name, "perm": rauzy.perm_str(perm),
        "n_max": n_max, "n_samples": n_samples, "replicas": replicas,
        "burn_in": burn_in,
    }
    return RunResult("correlation", seed, cfg, payload, time.time() - t0)


def _cross_covariance(x: np.ndarray, y: np.ndarray, n_max: int) -> np.ndarray:
    """cov(x_t, y_{t+n}) for n = 0..n_max via FFT."""
    n = len(x)
    xc = x - x.mean()
    yc = y - y.mean()
    size = 1
    while size < 2 * n:
        size *= 2
    fx = np.fft.rfft(xc, size)
    fy = np.fft.rfft(yc, size)
    corr = np.fft.irfft(np.conj(fx) * fy, size)[: n_max + 1]
    counts = n - np.arange(n_max + 1)
    return corr / counts


# ---------------------------------------------------------------------------
# return times to a positive-matrix cylinder
# ---------------------------------------------------------------------------

def return_time_tail(
    q: Word,
    perm: Perm,
    n_max: int,
    n_starts: int,
    seed: int,
    burn_in: int = 256,
    moment_eps: float = 0.05,
) -> RunResult:
    """Survival curve of the first visit of the squared chain to the cylinder.

    Also reports the flow-time statistic to the hit (Teichmueller time,
    the log of the unnormalized length growth) and its empirical
    exponential moment at `moment_eps`.
    """
    t0 = time.time()
    perm = rauzy.check_irreducible(perm)
    m = len(perm)
    A = induction.word_matrix(q)
    if not all(all(v > 0 for v in row) for row in A):
        raise ValueError("return-time word must have a strictly positive matrix")
    rng = rng_stream(seed, 0)
    lam0s = rng.dirichlet(np.ones(m), size=n_starts)
    q_ops = np.array([0 if w.op == "a" else 1 for w in q], dtype=np.int64)
    q_ns = np.array([w.n for w in q], dtype=np.int64)
    q_perms = np.array([perm_array(w.perm) for w in q], dtype=np.int64)
    hits, flow_t, status = kernels.survival_scan(
        np.asarray(lam0s, dtype=float), perm_array(perm), burn_in, n_max, q_ops, q_ns, q_perms
    )
    valid = status == 0
    hits = hits[valid]
    flow_t = flow_t[valid]
    hit_counts = np.bincount(hits[hits >= 0], minlength=n_max + 1)[: n_max + 1]
    survival = 1.0 - np.cumsum(hit_counts) / len(hits)
    hit_times = flow_t[hits >= 0]
    payload = {
        "n": list(range(n_max + 1)),
        "survival": survival.tolist(),
        "n_valid": int(valid.sum()),
        "hit_fraction": float((hits >= 0).mean()),
        "flow_time_mean": float(hit_times.mean()) if len(hit_times) else None,
        "flow_time_exp_moment": float(np.exp(moment_eps * hit_times).mean()) if len(hit_times) else None,
        "moment_eps": moment_eps,
    }
    cfg = {
        "q": induction.word_str(q), "perm": rauzy.perm_str(perm),
        "n_max": n_max, "n_starts": n_starts, "burn_in": burn_in,
    }
    return RunResult("return-times", seed, cfg, payload, time.time() - t0)


def sqrt_tail_fit(ns: np.ndarray, survival: np.ndarray, n_lo: int, n_hi: int) -> dict:
    """Least-squares fit of -log P(n) against sqrt(n) on [n_lo, n_hi]."""
    ns = np.asarray(ns)
    survival = np.asarray(survival)
    mask = (ns >= n_lo) & (ns <= n_hi) & (survival > 0)
    x = np.sqrt(ns[mask])
    y = -np.log(survival[mask])
    slope, intercept, rvalue, _, _ = stats.linregress(x, y)
    return {"slope": float(slope), "intercept": float(intercept), "r_squared": float(rvalue**2)}


# ---------------------------------------------------------------------------
# good words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoodWordParams:
    """Anchor word with positive matrix, window k, exponent theta, block r."""

    q: Word
    k: int
    theta: float
    r: int

    def __post_init__(self):
        A = induction.word_matrix(self.q)
        if not all(all(v > 0 for v in row) for row in A):
            raise ValueError("anchor word must have a strictly positive matrix")
        if not (0 < self.theta < 1):
            raise ValueError("theta must lie in (0, 1)")
        if self.r < self.k or self.k < 1:
            raise ValueError("need r >= k >= 1")


def _count_disjoint(word: Word, q: Word) -> int:
    count = i = 0
    lq = len(q)
    while i + lq <= len(word):
        if word[i : i + lq] == q:
            count += 1
            i += lq
        else:
            i += 1
    return count


def _window_good(window: Word, params: GoodWordParams) -> dict:
    cyl = induction.cylinder(window)
    min_coord = cyl.min_coordinate()
    occurrences = _count_disjoint(window, params.q)
    need = params.k**params.theta / len(params.q)
    return {
        "min_coordinate": min_coord,
        "thin_ok": min_coord >= np.exp(-params.k),
        "occurrences": occurrences,
        "occurrences_needed": need,
        "occurrences_ok": occurrences >= need,
    }


def classify_good(word: Word, params: GoodWordParams) -> tuple[bool, dict]:
    """Good-word test: the cylinder avoids thin simplices and the anchor
    word occurs often enough; longer words are judged blockwise.

    Accepts lengths k, N*r, and N*r + L with L < r (the block convention);
    anything else is rejected.
    """
    word = induction.check_admissible(tuple(word))
    n = len(word)
    k, r = params.k, params.r
    windows = []
    if n == k:
        windows.append(word)
    elif n >= r and n % r == 0:
        windows = [word[i * r : i * r + k] for i in range(n // r)]
    elif n > r:
        nblocks = n // r
        tail = n - nblocks * r
        windows = [word[i * r : i * r + k] for i in range(nblocks)]
        if tail >= k:
            windows.append(word[nblocks * r : nblocks * r + k])
    else:
        raise ValueError(f"word length {n} does not match the block convention (k={k}, r={r})")
    diags = [_window_good(w, params) for w in windows]
    good = all(d["thin_ok"] and d["occurrences_ok"] for d in diags)
    return good, {"windows": diags}


def bad_word_mass(
    params: GoodWordParams, perm: Perm, n_samples: int, seed: int, burn_in: int = 512
) -> float:
    """Empirical invariant mass of bad length-k words (Monte Carlo)."""
    perm = rauzy.check_irreducible(perm)
    m = len(perm)
    p0 = perm_array(perm)
    bad = 0
    done = 0
    attempt = 0
    while done < n_samples:
        rng = rng_stream(seed, 2000 + attempt)
        attempt += 1
        lam = _random_start(m, rng)
        p = p0.copy()
        inv = np.empty(m, dtype=np.int64)
        for j in range(m):
            inv[p[j]] = j
        status = 0
        for _ in range(burn_in):
            status, _, _ = kernels.zorich_once(lam, p, inv)
            if status < 0:
                break
        if status < 0:
            continue
        state = IETState(lam.copy(), tuple(int(v) + 1 for v in p))
        try:
            word = induction.encode(state, params.k)
        except BoundaryError:
            continue
        ok, _ = classify_good(word, params)
        bad += 0 if ok else 1
        done += 1
    return bad / n_samples


# ---------------------------------------------------------------------------
# thin simplex mass
# ---------------------------------------------------------------------------

def delta_eps_mass(perm: Perm, eps_grid, n_steps: int, seed: int, burn_in: int = 10_000) -> RunResult:
    """Invariant mass of {min lambda_i < eps} over the eps grid + log-log slope."""
    t0 = time.time()
    perm = rauzy.check_irreducible(perm)
    m = len(perm)
    edges = np.asarray(sorted(eps_grid), dtype=float)

    def attempt(lam0):
        lam = lam0.copy()
        p = perm_array(perm)
        inv = np.empty(m, dtype=np.int64)
        for j in range(m):
            inv[p[j]] = j
        counts, done, status = kernels.min_coord_hist(lam, p, inv, burn_in, n_steps, edges)
        if status != 0 or done < n_steps:
            return None
        return counts

    counts = _run_with_resample(attempt, m, seed)
    masses = counts / n_steps
    positive = masses > 0
    slope, intercept, rvalue, _, _ = stats.linregress(
        np.log(edges[positive]), np.log(masses[positive])
    )
    payload = {
        "eps": edges.tolist(),
        "mass": masses.tolist(),
        "loglog_slope": float(slope),
        "r_squared": float(rvalue**2),
    }
    cfg = {"perm": rauzy.perm_str(perm), "n_steps": n_steps, "burn_in": burn_in,
           "eps_grid": edges.tolist()}
    return RunResult("delta-eps-mass", seed, cfg, payload, time.time() - t0)


# ---------------------------------------------------------------------------
# CLT for the suspension flow
# ---------------------------------------------------------------------------

def _section_start(perm: Perm, rng) -> tuple[np.ndarray, np.ndarray]:
    """Random unit-area point over the section: lengths plus matching heights."""
    m = len(perm)
    lam = _random_start(m, rng)
    cone = density.cone(perm, "full")
    ell = zippered.area_coefficients(lam, perm)
    delta = density.sample_cone_point(cone, [float(x) for x in ell], rng)
    h = zippered.heights_from_delta(delta, perm)
    area = float(np.dot(lam, h))
    if area <= 0:
        raise RuntimeError("degenerate sampled zippered rectangle")
    return lam, h / area


def clt_flow(
    obs_name: str,
    perm: Perm,
    horizon: float,
    n_samples: int,
    seed: int,
    burn_in: int = 64,
) -> RunResult:
    """Distribution of normalized flow integrals vs the fitted Gaussian.

    Integrals of the observable along the dilation flow are exact per
    return interval (the shipped observables integrate in closed form).
    Samples are centered by the empirical flow mean and scaled by
    1/sqrt(horizon); the report carries the KS distance to the fitted
    centered Gaussian N(0, sigma_hat) and flags a degenerate sigma.
    """
    t0 = time.time()
    perm = rauzy.check_irreducible(perm)
    m = len(perm)
    if obs_name == "flow-coord1":
        code = OBS_COORD
    elif obs_name == "flow-height1":
        code = OBS_HEIGHT
    elif obs_name == "zero":
        code = -1
    else:
        raise ValueError(f"unknown flow observable {obs_name!r}")

    rng = rng_stream(seed, 0)
    lam0s = np.empty((n_samples, m))
    h0s = np.empty((n_samples, m))
    for i in range(n_samples):
        lam0s[i], h0s[i] = _section_start(perm, rng)

    if code < 0:
        vals = np.zeros(n_samples)
        sigma = 0.0
        ks = 0.0
        mean = 0.0
    else:
        raw, status = kernels.clt_flow_integrals(
            lam0s, h0s, perm_array(perm), burn_in, float(horizon), code
        )
        good = status == 0
        raw = raw[good]
        # the observable is centered by its empirical flow mean
        mean = float(raw.mean()) / horizon
        vals = (raw - raw.mean()) / np.sqrt(horizon)
        sigma = float(vals.std(ddof=1))
        if sigma > 1e-12:
            ks = float(stats.kstest(vals, stats.norm(loc=0.0, scale=sigma).cdf).statistic)
        else:
            ks = float("nan")
    degenerate = sigma <= 1e-12
    payload = {
        "sigma_hat": sigma,
        "ks_statistic": ks,
        "flow_mean": mean,
        "n_effective": int(len(vals)),
        "degenerate": bool(degenerate),
        "samples": vals.tolist(),
    }
    cfg = {
        "observable": obs_name, "perm": rauzy.perm_str(perm), "horizon": horizon,
        "n_samples": n_samples, "burn_in": burn_in,
    }
    return RunResult("clt", seed, cfg, payload, time.time() - t0)


def roof_exponential_moment(perm: Perm, eps: float, n_returns: int, seed: int) -> float:
    """Empirical mean of exp(eps * roof) along the section orbit."""
    perm = rauzy.check_irreducible(perm)
    rng = rng_stream(seed, 0)
    lam = _random_start(len(perm), rng)
    ell = zippered.area_coefficients(lam, perm)
    delta = density.sample_cone_point(density.cone(perm, "full"), [float(x) for x in ell], rng)
    cur = zippered.from_delta(zippered.DeltaCoords(lam, perm, delta))
    total = 0.0
    for _ in range(n_returns):
        total += float(np.exp(eps * zippered.roof(cur)))
        cur = zippered.section_map_s(cur)
    return total / n_returns
