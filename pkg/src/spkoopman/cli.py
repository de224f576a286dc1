"""Command-line interface.

Every subcommand reads an optional run-config file of ``key = value`` lines
(``#`` starts a comment, values are parsed as JSON when possible) and then
applies command-line flags on top. All outputs go under ``--run-dir`` and
each stage merges its results into ``summary.json`` there.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import baselines, tuning
from . import sparsify as sparsify_mod
from .prune import prune as run_prune, select_top, write_prune_csv
from .edmd import fit_edmd_continuous, fit_edmd_discrete
from .features import HermiteDictionary, KernelSpec
from .kdmd import fit_kdmd_continuous, fit_kdmd_discrete
from .pipeline import (
    export_model,
    generate_fixed_point,
    generate_hopf,
    load_model,
    normalize,
    pod_reduce,
    predict,
    read_snapshots,
    stride_split,
    write_snapshots,
    write_table,
)
from .pipeline.io import to_jsonable


def read_config(path):
    """Parse a ``key = value`` run-config file into a dict."""
    cfg = {}
    if path is None:
        return cfg
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            cfg[key.replace("-", "_")] = json.loads(value)
        except json.JSONDecodeError:
            cfg[key.replace("-", "_")] = value
    return cfg


class Settings:
    """Flag value if given, else config value, else default."""

    def __init__(self, args, cfg):
        self._args = vars(args)
        self._cfg = cfg

    def get(self, key, default=None):
        v = self._args.get(key)
        if v is not None:
            return v
        return self._cfg.get(key, default)


def _floats(v):
    if v is None:
        return None
    if isinstance(v, str):
        return [float(s) for s in v.replace(",", " ").split()]
    return [float(s) for s in np.atleast_1d(v)]


def _ints(v):
    return None if v is None else [int(round(s)) for s in _floats(v)]


def _update_summary(run_dir, stage, payload):
    path = run_dir / "summary.json"
    summary = json.loads(path.read_text()) if path.exists() else {}
    summary[stage] = to_jsonable(payload)
    path.write_text(json.dumps(summary, indent=2))
    return summary


def _eigs(values):
    return [[float(np.real(v)), float(np.imag(v))] for v in np.atleast_1d(values)]


def _resolve(run_dir, name):
    p = Path(name)
    return p if p.is_absolute() or p.exists() else run_dir / p


# --------------------------------------------------------------------------- commands


def cmd_generate(s, run_dir):
    system = s.get("system", "fixed_point")
    seed = int(s.get("seed", 0))
    if system == "fixed_point":
        sampler = s.get("sampler", "lhs")
        kw = {"sampler": sampler, "seed": seed}
        if sampler == "lhs":
            kw["n_samples"] = int(s.get("n_samples", 1600))
            box = _floats(s.get("box"))
            if box:
                kw["box"] = tuple(box)
        else:
            kw.update(
                x0=tuple(_floats(s.get("x0", [0.4, 0.4]))),
                dt=float(s.get("dt", 0.03754)),
                T=float(s.get("T", 30.0)),
            )
        snap = generate_fixed_point(**kw)
    elif system == "hopf":
        x0 = s.get("x0")
        snap = generate_hopf(
            x0=None if x0 is None else _floats(x0),
            dt=float(s.get("dt", 0.1)),
            T=float(s.get("T", 100.0)),
            mu=float(s.get("mu", 0.1)),
            noise=float(s.get("noise", 0.0)),
            seed=seed,
        )
    else:
        raise ValueError(f"unknown system {system!r}")
    if s.get("normalize", False):
        snap = normalize(snap)
    name = s.get("name", "data")
    out = write_snapshots(snap, run_dir / name)
    payload = {"manifest": str(out), "rows": snap.n_samples, "cols": snap.state_dim, "dt": snap.dt}
    return f"generate:{name}", payload


def cmd_pod(s, run_dir):
    snap = read_snapshots(_resolve(run_dir, s.get("input")))
    rank, energy = s.get("rank"), s.get("energy")
    pod, coeffs = pod_reduce(
        snap,
        rank=None if rank is None else int(rank),
        energy=None if energy is None else float(energy),
    )
    name = s.get("name", "pod")
    np.savez(run_dir / f"{name}_basis.npz", mean=pod.mean, basis=pod.basis,
             singular_values=pod.singular_values)
    out = write_snapshots(coeffs, run_dir / name)
    return "pod", {"manifest": str(out), "modes": pod.n_modes,
                   "energy_fraction": pod.energy_fraction}


def cmd_split(s, run_dir):
    snap = read_snapshots(_resolve(run_dir, s.get("input")))
    parts = dict(zip(("train", "val", "test"), stride_split(snap)))
    out = {k: str(write_snapshots(v, run_dir / k)) for k, v in parts.items()}
    return "split", {"manifests": out, "sizes": {k: v.n_samples for k, v in parts.items()}}


def _model_summary(model):
    info = {k: v for k, v in model.info.items() if k != "modes_direct"}
    return {"method": model.method, "continuous": model.continuous,
            "n_modes": model.n_modes, "eigenvalues": _eigs(model.eigenvalues), "info": info}


def cmd_fit(s, run_dir):
    snap = read_snapshots(_resolve(run_dir, s.get("train", "train.json")))
    continuous = bool(s.get("continuous", False))
    if continuous and snap.derivatives is None:
        raise ValueError("continuous fits need derivatives in the snapshot set")
    dt = s.get("dt", snap.dt)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if s.get("method") == "edmd":
            dictionary = HermiteDictionary(
                int(s.get("order", 5)), snap.state_dim,
                per_dimension_order=not bool(s.get("total_degree", False)),
            )
            svd_rank = s.get("svd_rank")
            svd_rank = None if svd_rank is None else int(svd_rank)
            solver = s.get("solver", "normal")
            if continuous:
                model = fit_edmd_continuous(snap.states, snap.derivatives, dictionary,
                                            svd_rank=svd_rank, dt=dt, solver=solver)
            else:
                model = fit_edmd_discrete(snap.states, dictionary, dt=float(dt or 1.0),
                                          svd_rank=svd_rank, solver=solver)
        else:
            kernel = KernelSpec(s.get("kernel", "gaussian"), sigma=float(s.get("sigma", 1.0)),
                                degree=int(s.get("degree", 2)))
            rank = int(s.get("rank", 36))
            if continuous:
                model = fit_kdmd_continuous(snap.states, snap.derivatives, kernel, rank, dt=dt)
            else:
                model = fit_kdmd_discrete(snap.states, kernel, rank, dt=float(dt or 1.0))
    out = export_model(model, run_dir / s.get("output", "model.json"))
    payload = _model_summary(model)
    payload.update(model=str(out), warnings=[str(w.message) for w in caught])
    return "fit", payload


def cmd_prune(s, run_dir):
    model = load_model(_resolve(run_dir, s.get("model", "model.json")))
    val = read_snapshots(_resolve(run_dir, s.get("val", "val.json")))
    cutoff = s.get("cutoff")
    report = run_prune(
        model, val.states, float(s.get("dt", val.dt)),
        cutoff=None if cutoff is None else int(cutoff),
        q_threshold=float(s.get("q_threshold", 0.05)),
    )
    write_prune_csv(report, run_dir / "prune.csv")
    top = select_top(model, report)
    out = export_model(top, run_dir / s.get("output", "model_pruned.json"))
    payload = _model_summary(top)
    payload.update(model=str(out), L_hat=int(report.chosen),
                   R=float(report.r_curve[report.chosen - 1]) if report.chosen else 1.0)
    return "prune", payload


def cmd_sparsify(s, run_dir):
    model = load_model(_resolve(run_dir, s.get("model", "model_pruned.json")))
    val = read_snapshots(_resolve(run_dir, s.get("val", "val.json")))
    alpha = s.get("alpha")
    res = sparsify_mod.sparsify(
        model, val.states, dt=float(s.get("dt", val.dt)),
        rho=float(s.get("rho", 0.99)), eps=float(s.get("eps", 1e-2)),
        alpha=None if alpha is None else float(alpha),
        n_alphas=int(s.get("n_alphas", 100)),
        rule=s.get("rule", "residual"),
    )
    sparsify_mod.write_path_csv(res.path, run_dir / "path.csv")
    out = export_model(res.model, run_dir / s.get("output", "model_sparse.json"))
    payload = res.summary()
    payload.update(model=str(out), eigenvalues=_eigs(res.model.eigenvalues))
    return "sparsify", payload


def cmd_baseline(s, run_dir):
    data = read_snapshots(_resolve(run_dir, s.get("data", "val.json")))
    X = data.states
    M = X.shape[0]
    method = s.get("method")
    rank = s.get("rank")
    dmd = baselines.fit_dmd(X, rank=None if rank is None else int(rank), dt=data.dt or 1.0)
    payload = {"method": method, "eigenvalues": _eigs(dmd.continuous_eigenvalues()),
               "amplitudes": _eigs(dmd.amplitudes)}
    if method == "spdmd":
        gamma = s.get("gamma")
        if gamma is None:
            gamma = float(s.get("gamma_fraction", 0.1)) * baselines.spdmd_gamma_max(dmd, X)
        res = baselines.fit_spdmd(dmd, X, float(gamma), polish=bool(s.get("polish", False)))
        rec = dmd.reconstruct(M, res.amplitudes)
        payload.update(gamma=float(gamma), support=res.support.tolist(), converged=res.converged,
                       L_r=int(res.support.size),
                       R=float(np.linalg.norm(X - rec.real) / np.linalg.norm(X)))
    elif method == "kou":
        energy = baselines.kou_energy(dmd, M)
        order = np.argsort(-energy, kind="stable")
        write_table(run_dir / "kou.csv", ["rank", "mode_index", "energy", "mu_re", "mu_im"],
                    [(k + 1, int(i), float(energy[i]),
                      float(dmd.continuous_eigenvalues()[i].real),
                      float(dmd.continuous_eigenvalues()[i].imag))
                     for k, i in enumerate(order)])
        payload.update(order=order.tolist(), energy=energy.tolist())
    elif method == "proxl0":
        res = baselines.prox_weighted_l0(dmd, float(s.get("penalty", 1.0)),
                                         steps=int(s.get("steps", 1)),
                                         eta=float(s.get("eta", 1e-12)), n_samples=M)
        payload.update(support=res.support.tolist(), L_r=int(res.support.size))
    elif method != "dmd":
        raise ValueError(f"unknown baseline {method!r}")
    return f"baseline_{method}", payload


def cmd_tune(s, run_dir):
    snap = read_snapshots(_resolve(run_dir, s.get("train", "train.json")))
    continuous = bool(s.get("continuous", False))
    sig = _floats(s.get("sigmas"))
    if sig is None:
        lo, hi, n = _floats(s.get("sigma_range", [0.1, 10.0, 20]))
        sig = np.logspace(np.log10(lo), np.log10(hi), int(n))
    ranks = _ints(s.get("ranks", [36]))
    res = tuning.grid_search(
        snap.states, sig, ranks,
        Xdot=snap.derivatives if continuous else None,
        kernel_kind=s.get("kernel", "gaussian"),
        degree=int(s.get("degree", 2)),
        threshold=float(s.get("threshold", 0.05)),
        folds=int(s.get("folds", 5)),
        shuffle=not bool(s.get("no_shuffle", False)),
        seed=int(s.get("seed", 0)),
        dt=float(snap.dt or 1.0),
        n_jobs=int(s.get("n_jobs", 1)),
    )
    tuning.write_surface_csv(res, run_dir / "surface.csv")
    best_sigma, best_rank = res.best()
    return "tune", {"best_sigma": best_sigma, "best_rank": best_rank, "notes": res.notes,
                    "max_mean_count": float(res.mean_counts.max())}


def cmd_predict(s, run_dir):
    model = load_model(_resolve(run_dir, s.get("model", "model_sparse.json")))
    dt = s.get("dt")
    test = s.get("test")
    truth = None
    if test is not None:
        snap = read_snapshots(_resolve(run_dir, test))
        x0, horizon, dt = snap.states[0], snap.n_samples - 1, dt or snap.dt
        truth = snap.states
    else:
        x0 = _floats(s.get("x0"))
        horizon = int(s.get("horizon", 100))
    pred = predict(model, x0, horizon, dt=None if dt is None else float(dt))
    cols = [f"x{j + 1}" for j in range(pred.states.shape[1])]
    write_table(run_dir / "prediction.csv", ["t", *cols],
                ([float(t), *map(float, row)] for t, row in zip(pred.times, pred.states)))
    payload = {"horizon": int(horizon), "dt": pred.dt, "imag_residual": pred.imag_residual}
    if truth is not None:
        payload["max_abs_error"] = np.abs(pred.states - truth).max(axis=0).tolist()
    return "predict", payload


COMMANDS = {
    "generate": cmd_generate,
    "pod": cmd_pod,
    "split": cmd_split,
    "fit": cmd_fit,
    "prune": cmd_prune,
    "sparsify": cmd_sparsify,
    "baseline": cmd_baseline,
    "tune": cmd_tune,
    "predict": cmd_predict,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run-config file of key = value lines")
    common.add_argument("--run-dir", dest="run_dir", help="output directory (default: run)")

    p = argparse.ArgumentParser(prog="spkoopman", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="synthesize a snapshot set")
    g.add_argument("--system", choices=["fixed_point", "hopf"])
    g.add_argument("--sampler", choices=["lhs", "trajectory"])
    g.add_argument("--n-samples", dest="n_samples", type=int)
    g.add_argument("--x0", help="comma-separated; use --x0=-0.3,-0.3 for negatives")
    g.add_argument("--dt", type=float)
    g.add_argument("--T", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--normalize", action="store_true", default=None)
    g.add_argument("--name")

    q = sub.add_parser("pod", parents=[common], help="POD-reduce a snapshot set")
    q.add_argument("--input")
    q.add_argument("--rank", type=int)
    q.add_argument("--energy", type=float)
    q.add_argument("--name")

    sp = sub.add_parser("split", parents=[common], help="stride split into train/val/test")
    sp.add_argument("--input")

    f = sub.add_parser("fit", parents=[common], help="fit an EDMD or KDMD model")
    f.add_argument("method", choices=["edmd", "kdmd"])
    f.add_argument("--train")
    f.add_argument("--continuous", action="store_true", default=None)
    f.add_argument("--order", type=int)
    f.add_argument("--total-degree", dest="total_degree", action="store_true", default=None)
    f.add_argument("--svd-rank", dest="svd_rank", type=int)
    f.add_argument("--solver", choices=["normal", "lstsq"], help="EDMD least-squares route")
    f.add_argument("--kernel", choices=["linear", "polynomial", "gaussian"])
    f.add_argument("--sigma", type=float)
    f.add_argument("--degree", type=int)
    f.add_argument("--rank", type=int)
    f.add_argument("--dt", type=float)
    f.add_argument("--output")

    pr = sub.add_parser("prune", parents=[common], help="rank modes by linear-evolution error")
    pr.add_argument("--model")
    pr.add_argument("--val")
    pr.add_argument("--cutoff", type=int)
    pr.add_argument("--q-threshold", dest="q_threshold", type=float)
    pr.add_argument("--dt", type=float)
    pr.add_argument("--output")

    s = sub.add_parser("sparsify", parents=[common], help="multi-task ElasticNet mode selection")
    s.add_argument("--model")
    s.add_argument("--val")
    s.add_argument("--rho", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--n-alphas", dest="n_alphas", type=int)
    s.add_argument("--rule", choices=["residual", "sparsest"])
    s.add_argument("--dt", type=float)
    s.add_argument("--output")

    b = sub.add_parser("baseline", parents=[common], help="DMD-family baselines")
    b.add_argument("method", choices=["dmd", "spdmd", "kou", "proxl0"])
    b.add_argument("--data")
    b.add_argument("--rank", type=int)
    b.add_argument("--gamma", type=float)
    b.add_argument("--gamma-fraction", dest="gamma_fraction", type=float)
    b.add_argument("--polish", action="store_true", default=None)
    b.add_argument("--penalty", type=float)
    b.add_argument("--steps", type=int)
    b.add_argument("--eta", type=float)

    t = sub.add_parser("tune", parents=[common], help="cross-validated KDMD grid search")
    t.add_argument("--train")
    t.add_argument("--continuous", action="store_true", default=None)
    t.add_argument("--kernel", choices=["linear", "polynomial", "gaussian"])
    t.add_argument("--degree", type=int)
    t.add_argument("--sigmas", help="explicit list, e.g. '0.5,1,2'")
    t.add_argument("--sigma-range", dest="sigma_range", help="'low,high,count' log-spaced")
    t.add_argument("--ranks", help="e.g. '12,24,36'")
    t.add_argument("--threshold", type=float)
    t.add_argument("--folds", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--no-shuffle", dest="no_shuffle", action="store_true", default=None)
    t.add_argument("--n-jobs", dest="n_jobs", type=int)

    pd = sub.add_parser("predict", parents=[common], help="multi-step prediction")
    pd.add_argument("--model")
    pd.add_argument("--test", help="snapshot manifest; uses its first state and length")
    pd.add_argument("--x0")
    pd.add_argument("--horizon", type=int)
    pd.add_argument("--dt", type=float)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = read_config(args.config)
    s = Settings(args, cfg)
    run_dir = Path(s.get("run_dir", "run"))
    run_dir.mkdir(parents=True, exist_ok=True)
    try:
        stage, payload = COMMANDS[args.command](s, run_dir)
    except (ValueError, OSError) as exc:
        print(f"spkoopman {args.command}: error: {exc}", file=sys.stderr)
        return 2
    _update_summary(run_dir, stage, payload)
    print(json.dumps(to_jsonable(payload), indent=2, default=str)[:4000])
    return 0


if __name__ == "__main__":
    sys.exit(main())
