"""Experiment runners.

Each runner takes an :class:`ExperimentConfig` and returns a
:class:`RunResult`: one record per sample, a JSON-ready summary and the
outcome of the statistical gate (if the experiment has one).

Sample ``k`` at grid point ``g`` draws from the random stream with index
``g * 2**32 + k``, so output is independent of batching and thread count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import blas
from scipy.stats import norm

from ..families import (
    DOCChannel,
    DOCTriple,
    composition_split,
    compose_doc,
    eb_certificate,
    ppt2_conditions,
    ppt_test,
    realignment_test,
)
from ..quantum import partial_transpose, psd_margin
from ..sampling import (
    HaarIsometry,
    RngStream,
    isometry_factor,
    sample_ginibre_batch,
    sample_isometry_batch,
    stinespring_choi,
)
from ..twirl import CovariantParams, abc_of_blocks, lambdas_of_blocks
from ..weingarten import (
    MomentQuery,
    evaluate_query,
    fraction_str,
    gamma_moment,
    moment_lambda,
    normal_ss_moment,
    semicircle_moment,
)

__all__ = [
    "RunResult",
    "run_lambda_histogram",
    "run_moment_vs_oracle",
    "run_spectral_experiment",
    "run_ppt_threshold_scan",
    "run_ppt2_sweep",
    "run",
    "wilson_interval",
    "stream_index",
    "nested_c_matrices",
]


@dataclass
class RunResult:
    columns: list
    records: list
    summary: dict
    gate_passed: bool = True
    extra_tables: dict = field(default_factory=dict)


def stream_index(point, sample):
    return (point << 32) | sample


def wilson_interval(successes, n, level=0.95):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    z = norm.ppf(0.5 + level / 2)
    phat = successes / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    # the interval always contains phat; clamp away rounding at 0 and 1
    return (max(0.0, min(phat, centre - half)), min(1.0, max(phat, centre + half)))


def normal_cdf(x):
    return 0.5 * (1 + math.erf(x / math.sqrt(2)))


def moment_stats(x, kmax=4):
    """Empirical raw moments E[x^k] with standard errors."""
    x = np.asarray(x, dtype=float)
    out = []
    for k in range(1, kmax + 1):
        xk = x**k
        se = float(np.std(xk, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else float("nan")
        out.append({"k": k, "mean": float(np.mean(xk)) if len(x) else float("nan"), "se": se})
    return out


def _chunks(n, size):
    return [range(a, min(a + size, n)) for a in range(0, n, size)]


def _map_ordered(fn, items, threads):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _batch_size(d, s):
    """Samples per batch, keeping each stacked isometry batch near 32 MB."""
    per = d * d * s * 16
    return int(max(1, min(4096, 32_000_000 // per)))


def _isometry_blocks(cfg, point_index, d, s, indices):
    V = sample_isometry_batch(d, s, cfg.seed, [stream_index(point_index, k) for k in indices])
    return V.reshape(len(indices), s, d, d)


def _diagonal_lambda(cfg, point_index, d, s, indices, i):
    """lambda1 or lambda3 without forming V: diag(V_k) = diag(G_k M) with V = G M."""
    G = sample_ginibre_batch(d, s, cfg.seed, [stream_index(point_index, k) for k in indices])
    M = isometry_factor(G)
    diag = np.einsum("nkij,nji->nki", G.reshape(len(indices), s, d, d), M)
    if i == 1:
        return np.sum(np.abs(diag.sum(axis=-1)) ** 2, axis=-1)
    return np.sum(np.abs(diag) ** 2, axis=(-2, -1))


# ---------------------------------------------------------------------------
# lambda histograms


def run_lambda_histogram(cfg):
    which = cfg.params["which"]
    i = int(which[-1])
    columns = ["d", "s", "rule", "sample", "value", "scaled"]
    records, points = [], []
    for g, pt in enumerate(cfg.grid):
        d, s = pt.d, pt.s

        def work(idx, g=g, d=d, s=s):
            if i != 2 and s >= 2:
                return _diagonal_lambda(cfg, g, d, s, idx, i)
            blocks = _isometry_blocks(cfg, g, d, s, idx)
            return lambdas_of_blocks(blocks)[i - 1]

        values = np.concatenate(
            _map_ordered(work, _chunks(cfg.n_samples, _batch_size(d, s)), cfg.threads)
        )
        scaled = s * values
        for k, (v, sv) in enumerate(zip(values, scaled)):
            records.append([d, s, pt.label, k, float(v), float(sv)])
        entry = {**pt.as_dict(), "n": int(len(values))}
        if i == 3:
            entry["moments"] = moment_stats(values)
            exact_var = float(moment_lambda(3, d, s, 2) - 1) if d * s >= 2 else 0.0
            entry["reference"] = {"law": "mean 1", "mean": 1.0, "variance": exact_var}
            entry["variance"] = float(np.var(values, ddof=1))
        else:
            entry["moments"] = moment_stats(scaled)
            ref = gamma_moment if i == 1 else normal_ss_moment
            entry["reference"] = {
                "law": f"Gamma({s},1)" if i == 1 else f"N({s},{s})",
                "moments": [float(ref(s, k)) for k in range(1, 5)],
            }
            entry["variance"] = float(np.var(scaled, ddof=1))
        if d * s >= 4:
            entry["exact_moments"] = [float(moment_lambda(i, d, s, k)) for k in range(1, 5)]
        points.append(entry)
    summary = {"which": which, "points": points}
    return RunResult(columns, records, summary)


# ---------------------------------------------------------------------------
# Monte Carlo against the exact oracle


def _statistics(blocks):
    """Per-sample base quantities for all oracle targets."""
    l1, l2, l3 = lambdas_of_blocks(blocks)
    A, B, C = abc_of_blocks(blocks)
    return {
        "lambda1": l1,
        "lambda2": l2,
        "lambda3": l3,
        "A": A,
        "B": B,
        "C": C,
    }


def _target_values(stats, target, p):
    if target.startswith("lambda"):
        return stats[target] ** p
    if target.startswith("Tr"):
        X = stats[target[2]]
        return np.real(np.trace(np.linalg.matrix_power(X, p), axis1=-2, axis2=-1))
    if target == "entryA":
        return stats["A"][:, 0, 1] ** p
    return np.abs(stats[target[5]][:, 0, 1]) ** (2 * p)


def run_moment_vs_oracle(cfg):
    targets = cfg.params["targets"]
    z_max = cfg.tol("z_max", 4.0)
    columns = ["d", "s", "sample", "lambda1", "lambda2", "lambda3", "A01", "absB01", "absC01", "TrC2"]
    records, rows = [], []
    gate = True
    for g, pt in enumerate(cfg.grid):
        d, s = pt.d, pt.s

        def work(idx, g=g, d=d, s=s):
            st = _statistics(_isometry_blocks(cfg, g, d, s, idx))
            vals = {
                (t["target"], p): _target_values(st, t["target"], p)
                for t in targets
                for p in t["p"]
            }
            base = np.stack(
                [
                    st["lambda1"],
                    st["lambda2"],
                    st["lambda3"],
                    st["A"][:, 0, 1] if d > 1 else st["A"][:, 0, 0],
                    np.abs(st["B"][:, 0, 1]) if d > 1 else np.abs(st["B"][:, 0, 0]),
                    np.abs(st["C"][:, 0, 1]) if d > 1 else np.abs(st["C"][:, 0, 0]),
                    _target_values(st, "TrC", 2),
                ],
                axis=1,
            )
            return vals, base

        parts = _map_ordered(work, _chunks(cfg.n_samples, min(10_000, _batch_size(d, s))), cfg.threads)
        base = np.concatenate([b for _, b in parts])
        for k, row in enumerate(base):
            records.append([d, s, k] + [float(x) for x in row])
        for t in targets:
            for p in t["p"]:
                x = np.concatenate([v[(t["target"], p)] for v, _ in parts])
                mean = float(np.mean(x))
                se = float(np.std(x, ddof=1) / np.sqrt(len(x)))
                row = {"d": d, "s": s, "target": t["target"], "p": p, "mc": mean, "se": se}
                try:
                    exact = evaluate_query(MomentQuery(d, s, p, t["target"]))
                except ValueError as exc:
                    row.update(exact=None, error=str(exc), z=None, flagged=False)
                else:
                    z = (mean - float(exact)) / se if se > 0 else 0.0
                    flagged = abs(z) > z_max
                    gate &= not flagged
                    row.update(exact=fraction_str(exact), exact_float=float(exact), z=z, flagged=flagged)
                rows.append(row)
    summary = {"z_max": z_max, "rows": rows, "gate": {"passed": gate}}
    return RunResult(columns, records, summary, gate)


# ---------------------------------------------------------------------------
# Spectra of C


def _polar_ginibre(gen, rows, cols, real):
    """Real and imaginary parts of a Ginibre block.

    Entries are drawn as sqrt(E) (cos t, sin t) with E ~ Exp(1) and t
    uniform, the polar form of a standard complex Gaussian.
    """
    n = rows * cols
    r = gen.random(n, dtype=real)
    np.subtract(real(1), r, out=r)  # uniform on (0, 1]
    np.log(r, out=r)
    np.negative(r, out=r)
    np.sqrt(r, out=r)
    theta = gen.random(n, dtype=real)
    theta *= real(2 * np.pi)
    re = np.cos(theta)
    re *= r
    im = np.sin(theta, out=theta)
    im *= r
    return re.reshape(rows, cols), im.reshape(rows, cols)


def _transpose_trace(X, Y):
    """sum_k X_k o Y_k^T for stacks of square blocks."""
    return np.einsum("kij,kji->ij", X, Y)


def nested_c_matrices(d, s_values, rng, precision="single", chunk_blocks=64):
    """C matrices of random Stinespring channels for several s from one Ginibre draw.

    The isometry for environment dimension s is V = G M with G the first s
    blocks of a single (s_max d) x d Ginibre matrix and M = L^{-*} from the
    Cholesky factor of G*G.  Each C has exactly the law of its own (d, s)
    while different s share randomness.  G is kept as separate real and
    imaginary planes so that G M costs three real products instead of four.
    """
    s_sorted = sorted(set(int(s) for s in s_values))
    if precision not in ("single", "double"):
        raise ValueError(f"precision must be 'single' or 'double', got {precision!r}")
    real = np.float32 if precision == "single" else np.float64
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    bounds = sorted(set(range(0, s_sorted[-1], chunk_blocks)) | set(s_sorted) | {0})
    chunks, grams = [], {}
    gram_re = np.zeros((d, d))
    gram_im = np.zeros((d, d))
    for a, b in zip(bounds[:-1], bounds[1:]):
        re, im = _polar_ginibre(gen, (b - a) * d, d, real)
        chunks.append((a, b, re, im))
        # G*G = (Re^T Re + Im^T Im) + i (Re^T Im - Im^T Re)
        gram_re += re.T @ re
        gram_re += im.T @ im
        X = re.T @ im
        gram_im += X - X.T
        if b in s_sorted:
            grams[b] = gram_re + 1j * gram_im
    out = {}
    for s in s_sorted:
        L = np.linalg.cholesky(grams[s])
        M = np.linalg.inv(L).conj().T
        Mr, Mi = M.real.astype(real), M.imag.astype(real)
        Ms = Mr + Mi
        C_re = np.zeros((d, d))
        X = np.zeros((d, d))
        for a, b, re, im in chunks:
            if a >= s:
                break
            # (re + i im)(Mr + i Mi) with three real products
            P1, P2 = re @ Mr, im @ Mi
            Bi = (re + im) @ Ms
            Bi -= P1
            Bi -= P2
            Br = P1
            Br -= P2
            Br = Br.reshape(b - a, d, d)
            Bi = Bi.reshape(b - a, d, d)
            # C_ij = sum_k B_ij conj(B_ji)
            C_re += _transpose_trace(Br, Br)
            C_re += _transpose_trace(Bi, Bi)
            X += _transpose_trace(Bi, Br)
        out[s] = C_re + 1j * (X - X.T)
    return out


def _spectral_reference(scaling, d, s):
    c = s / d
    if scaling == "sC":
        return {"law": "semicircle", "mean": c, "variance": c}
    if scaling == "sqrt_ds_C":
        return {"law": "semicircle", "mean": math.sqrt(c), "variance": 1.0}
    return {"law": "point mass", "mean": 1.0, "variance": 0.0}


def run_spectral_experiment(cfg):
    scaling = cfg.params["scaling"]
    precision = cfg.params.get("precision", "single")
    by_d = {}
    for pt in cfg.grid:
        by_d.setdefault(pt.d, []).append(pt)
    columns = ["d", "s", "rule", "sample", "m1", "m2", "m3", "m4", "lambda_min", "lambda_max", "dist_to_I"]
    spec_columns = ["d", "s", "sample", "index", "eigenvalue"]
    records, spectra, points = [], [], []
    for g, (d, pts) in enumerate(by_d.items()):
        s_values = [pt.s for pt in pts]

        def work(k, g=g, d=d, s_values=s_values):
            Cs = nested_c_matrices(d, s_values, RngStream(cfg.seed, stream_index(g, k)), precision)
            res = {}
            for s, C in Cs.items():
                C = (C + C.conj().T) / 2
                factor = {"sC": s, "sqrt_ds_C": math.sqrt(d * s), "dC": d}[scaling]
                ev = np.linalg.eigvalsh(factor * C)
                dist = float(np.max(np.abs(ev * (d / factor) - 1)))
                res[s] = (ev, dist)
            return res

        results = _map_ordered(work, range(cfg.n_samples), cfg.threads)
        for pt in pts:
            s = pt.s
            stats = []
            for k, res in enumerate(results):
                ev, dist = res[s]
                m = [float(np.mean(ev**j)) for j in range(1, 5)]
                stats.append(m + [float(ev[0]), float(ev[-1]), dist])
                records.append([d, s, pt.label, k] + stats[-1])
                spectra.extend([d, s, k, j, float(x)] for j, x in enumerate(ev))
            arr = np.array(stats).reshape(-1, 7)
            ref = _spectral_reference(scaling, d, s)
            if ref["law"] == "semicircle":
                ref["moments"] = [float(semicircle_moment(ref["mean"], ref["variance"], j)) for j in range(1, 5)]
            else:
                ref["moments"] = [1.0] * 4
            mean1 = arr[:, 0]
            var = arr[:, 1] - arr[:, 0] ** 2
            n = len(arr)
            points.append(
                {
                    **pt.as_dict(),
                    "n": n,
                    "scaling": scaling,
                    "mean_of_spectrum": float(np.mean(mean1)),
                    "variance_of_spectrum": float(np.mean(var)),
                    "moments": [float(x) for x in np.mean(arr[:, :4], axis=0)],
                    "lambda_min_mean": float(np.mean(arr[:, 4])),
                    "lambda_max_mean": float(np.mean(arr[:, 5])),
                    "fraction_lambda_min_positive": float(np.mean(arr[:, 4] > 0)),
                    "fraction_lambda_min_negative": float(np.mean(arr[:, 4] < 0)),
                    "max_dist_dC_to_identity": float(np.max(arr[:, 6])),
                    "reference": ref,
                }
            )
    summary = {"scaling": scaling, "precision": precision, "points": points}
    return RunResult(columns, records, summary, extra_tables={"spectra.csv": (spec_columns, spectra)})


# ---------------------------------------------------------------------------
# PPT threshold scans


def _covariant_margin(family, d, l1, l2, l3):
    """Smallest slack of the PPT inequalities of a covariant family."""
    uu = np.minimum(l1, d - l1)
    uubar = np.minimum(l2, d - l2)
    if family == "UU":
        return uu
    if family == "UUbar":
        return uubar
    if family == "OO":
        return np.minimum(uu, uubar)
    return np.min(
        np.stack([l3, d - l3, l1, l2, d * l3 - l1, d * l3 - l2, l1 - 2 * l3 + d, l2 - 2 * l3 + d, d - l1, d - l2]),
        axis=0,
    )


def _ppt_tolerance(cfg):
    return cfg.tol("ppt", 1e-9)


def _family_margins(cfg, family, blocks, d):
    """PPT flag and margin for each sample in a batch."""
    tol = _ppt_tolerance(cfg)
    if family in ("UU", "UUbar", "OO", "HH"):
        l1, l2, l3 = lambdas_of_blocks(blocks)
        margin = _covariant_margin(family, d, l1, l2, l3)
        scale = 1 + np.abs(l1) + np.abs(l2) + np.abs(l3) + d
        return margin >= -tol * scale, margin
    flags, margins = [], []
    for b in blocks:
        if family == "unstructured":
            V = HaarIsometry(b.reshape(-1, d), d, b.shape[0], check=False)
            m = psd_margin(partial_transpose(stinespring_choi(V)))
            flags.append(m >= -tol)
            margins.append(m)
            continue
        A, B, C = abc_of_blocks(b)
        ch = DOCChannel(DOCTriple(A, B, C), "DOC")
        r = ppt_test(ch, tol)
        pair_ok = r.pair_margin >= -tol * (1 + np.max(np.abs(A)))
        spec_ok = r.lambda_min_C >= -tol * (1 + np.max(np.abs(C)))
        if family == "DUC":
            flags.append(pair_ok)
            margins.append(r.pair_margin)
        elif family == "CDUC":
            flags.append(spec_ok)
            margins.append(r.lambda_min_C)
        else:
            flags.append(pair_ok and spec_ok)
            margins.append(min(r.pair_margin, r.lambda_min_C))
    return np.array(flags), np.array(margins)


def run_ppt_threshold_scan(cfg):
    families = cfg.params["families"]
    columns = ["d", "s", "rule", "sample", "family", "ppt", "margin"]
    records, points = [], []
    for g, pt in enumerate(cfg.grid):
        d, s = pt.d, pt.s

        def work(idx, g=g, d=d, s=s):
            blocks = _isometry_blocks(cfg, g, d, s, idx)
            return {f: _family_margins(cfg, f, blocks, d) for f in families}

        parts = _map_ordered(work, _chunks(cfg.n_samples, min(64, _batch_size(d, s))), cfg.threads)
        for f in families:
            flags = np.concatenate([p[f][0] for p in parts])
            margins = np.concatenate([p[f][1] for p in parts])
            for k, (fl, m) in enumerate(zip(flags, margins)):
                records.append([d, s, pt.label, k, f, int(bool(fl)), float(m)])
            n = len(flags)
            hits = int(np.sum(flags))
            entry = {
                **pt.as_dict(),
                "family": f,
                "n": n,
                "ppt_fraction": hits / n,
                "wilson_95": list(wilson_interval(hits, n)),
                "fraction_se": math.sqrt(max(hits / n * (1 - hits / n), 0) / n),
                "mean_margin": float(np.mean(margins)),
                "margin_se": float(np.std(margins, ddof=1) / math.sqrt(n)) if n > 1 else None,
            }
            if f in ("UUbar", "OO", "HH") and pt.label == "fixed":
                entry["reference_fraction"] = normal_cdf(math.sqrt(s))
            points.append(entry)
    summary = {"families": families, "points": points}
    return RunResult(columns, records, summary)


# ---------------------------------------------------------------------------
# PPT^2 sweeps


def run_ppt2_sweep(cfg):
    mode = cfg.params["mode"]
    tol = _ppt_tolerance(cfg)
    columns = [
        "d", "s1", "s2", "rule", "sample", "ppt2", "margin_block", "margin_pair",
        "certified", "certified_equal_split", "ppt_first", "ppt_second", "realignment_slack",
    ]
    records, points = [], []
    for g, pt in enumerate(cfg.grid):
        d, s1, s2 = pt.d, pt.s, pt.s2

        def one(k, g=g, d=d, s1=s1, s2=s2):
            b1 = _isometry_blocks(cfg, g, d, s1, [2 * k])[0]
            t1 = DOCTriple(*abc_of_blocks(b1))
            if mode == "independent":
                b2 = _isometry_blocks(cfg, g, d, s2, [2 * k + 1])[0]
                t2 = DOCTriple(*abc_of_blocks(b2))
            elif mode == "equal":
                t2 = t1
            else:
                t2 = t1.conj()
            ok, m1, m2 = ppt2_conditions(t1, t2, tol)
            comp = compose_doc(t1, t2)
            cert = eb_certificate(comp, split=composition_split(t1, t2), tol=tol)
            cert_eq = eb_certificate(comp, tol=tol)
            _, slack = realignment_test(comp, tol)
            return [
                d, s1, s2 if mode == "independent" else s1, pt.label, k, int(ok), m1, m2,
                int(cert.certified), int(cert_eq.certified),
                int(ppt_test(t1, tol).ppt), int(ppt_test(t2, tol).ppt), slack,
            ]

        rows = _map_ordered(one, range(cfg.n_samples), cfg.threads)
        records.extend(rows)
        arr = np.array([r[5:] for r in rows], dtype=float)
        n = len(rows)

        def rate(col):
            hits = int(arr[:, col].sum())
            return {"rate": hits / n, "wilson_95": list(wilson_interval(hits, n))}

        points.append(
            {
                **pt.as_dict(),
                "mode": mode,
                "n": n,
                "ppt2_conditions": rate(0),
                "certified": rate(3),
                "certified_equal_split": rate(4),
                "ppt_first": rate(5),
                "ppt_second": rate(6),
                "worst_margin_block": float(arr[:, 1].min()),
                "worst_margin_pair": float(arr[:, 2].min()),
                "min_realignment_slack": float(arr[:, 7].min()),
            }
        )
    summary = {"mode": mode, "points": points}
    return RunResult(columns, records, summary)


RUNNERS = {
    "lambda-histogram": run_lambda_histogram,
    "moment-oracle": run_moment_vs_oracle,
    "spectral": run_spectral_experiment,
    "ppt-scan": run_ppt_threshold_scan,
    "ppt2-sweep": run_ppt2_sweep,
}


def run(cfg):
    return RUNNERS[cfg.kind](cfg)
