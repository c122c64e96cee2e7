"""Config-driven command line: run / montecarlo / bounds / validate.

Experiments are described by a single TOML file; the only CLI-level knobs
are --seed, --out and --check.  Every output artifact embeds the config
digest and tool version, writes atomically, and renders numbers with 17
significant digits so reruns are byte-identical.

Exit status: 0 success, 1 configuration error, 2 numerical error,
3 acceptance-check violation (with --check).
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__, bounds as bmod, harness, oracle as omod, rng, smd
from .errors import ConfigurationError, InputError, NumericalError
from .geometry import ConstraintSet, Geometry, MirrorMap
from .io_utils import atomic_write, canonical_json, config_digest, format_float
from .problems import make_problem

_SCHEMA = {
    "problem": {"kind", "a_diag", "b_lin", "planes_a", "planes_c", "shift",
                "c_lin"},
    "set": {"kind", "lo", "hi", "center", "radius", "dim"},
    "geometry": {"map", "entropy_floor"},
    "oracle": {"bias", "B0", "q", "direction", "c_zo", "mu0", "r",
               "noise", "sigma", "radius", "dof", "scale", "nu", "nu1",
               "n_check"},
    "schedule": {"alpha0", "k"},
    "run": {"T", "n_trials", "checkpoints", "seed", "audit", "x0"},
    "bounds": {"eps", "p", "t_max", "kappa1", "nu2"},
    "output": {"dir", "formats"},
}
_REQUIRED = ("problem", "set", "geometry", "oracle", "schedule", "run")


def parse_config(path: str) -> dict:
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    unknown = []
    for section, body in cfg.items():
        if section not in _SCHEMA:
            unknown.append(section)
            continue
        if not isinstance(body, dict):
            raise ConfigurationError(f"section [{section}] must be a table")
        for key in body:
            if key not in _SCHEMA[section]:
                unknown.append(f"{section}.{key}")
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    missing = [s for s in _REQUIRED if s not in cfg]
    if missing:
        raise ConfigurationError(f"missing config sections: {', '.join(missing)}")
    return cfg


def emit_toml(cfg: dict) -> str:
    def render(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return format_float(v)
        if isinstance(v, str):
            return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if isinstance(v, list):
            return "[" + ", ".join(render(x) for x in v) + "]"
        raise ConfigurationError(f"cannot emit config value {v!r}")

    lines = []
    for section in sorted(cfg):
        lines.append(f"[{section}]")
        for key in sorted(cfg[section]):
            lines.append(f"{key} = {render(cfg[section][key])}")
        lines.append("")
    return "\n".join(lines)


class Experiment:
    """Model objects materialized from a validated config dict."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.digest = config_digest(cfg)
        self.cset = self._build_set(cfg["set"])
        gmap = MirrorMap(
            cfg["geometry"].get("map", "euclidean"),
            entropy_floor=cfg["geometry"].get("entropy_floor", 1e-12),
        )
        self.geom = Geometry(gmap, self.cset)
        self.problem = self._build_problem(cfg["problem"])
        self.bias, self.noise = self._build_oracle(cfg["oracle"])
        sc = cfg["schedule"]
        self.sched = smd.StepSchedule(float(sc["alpha0"]), float(sc["k"]))
        self.run_cfg = dict(cfg["run"])
        self.bounds_cfg = dict(cfg.get("bounds", {}))
        self.out_cfg = dict(cfg.get("output", {}))
        self._report_assumptions()

    @staticmethod
    def _build_set(sc) -> ConstraintSet:
        kind = sc.get("kind")
        if kind == "box":
            return ConstraintSet.box(np.asarray(sc["lo"], dtype=np.float64),
                                     np.asarray(sc["hi"], dtype=np.float64))
        if kind == "l2_ball":
            return ConstraintSet.l2_ball(
                np.asarray(sc["center"], dtype=np.float64), float(sc["radius"])
            )
        if kind == "simplex":
            return ConstraintSet.simplex(int(sc["dim"]))
        raise ConfigurationError(f"unknown set kind {kind!r}")

    def _build_problem(self, pc):
        kind = pc.get("kind")
        params = {}
        for key in ("a_diag", "b_lin", "planes_a", "planes_c", "shift",
                    "c_lin"):
            if key in pc:
                params[key] = np.asarray(pc[key], dtype=np.float64)
        return make_problem(kind, self.cset, self.geom.pair, **params)

    def _build_oracle(self, oc):
        bkind = oc.get("bias", "none")
        smoothing = None
        if bkind == "zeroth_order":
            smoothing = omod.SmoothingSchedule(float(oc.get("mu0", 0.1)),
                                               float(oc.get("r", 1.0)))
        bias = omod.BiasModel(
            kind=bkind,
            B0=float(oc.get("B0", 0.0)),
            q=float(oc.get("q", 0.0)),
            direction=(np.asarray(oc["direction"], dtype=np.float64)
                       if "direction" in oc else None),
            c_zo=float(oc.get("c_zo", 0.0)),
            smoothing=smoothing,
        )
        noise = omod.NoiseModel(
            kind=oc.get("noise", "gaussian"),
            sigma=float(oc.get("sigma", 0.0)),
            radius=float(oc.get("radius", 0.0)),
            dof=float(oc.get("dof", 3.0)),
            scale=float(oc.get("scale", 1.0)),
            nu=float(oc.get("nu", 0.0)),
            nu1=float(oc["nu1"]) if "nu1" in oc else None,
        )
        return bias, noise

    def _report_assumptions(self):
        k = self.sched.k
        if not (0.5 < k <= 1.0):
            print(f"warning: step exponent k={k} outside (1/2, 1]",
                  file=sys.stderr)
        if self.bias.kind != "none":
            q = (self.bias.smoothing.r if self.bias.kind == "zeroth_order"
                 else self.bias.q)
            if k + q <= 1.0:
                print(
                    f"warning: k+q={k + q} <= 1; the bias summability "
                    "assumption fails",
                    file=sys.stderr,
                )

    def bound_params(self) -> bmod.BoundParams:
        return bmod.params_from(
            self.problem, self.geom, self.noise, self.bias, self.sched,
            kappa1=self.bounds_cfg.get("kappa1"),
            nu2=self.bounds_cfg.get("nu2"),
            T_max=int(self.bounds_cfg.get("t_max", bmod.DEFAULT_T_MAX)),
        )

    def checkpoints(self, T: int) -> np.ndarray:
        cps = self.run_cfg.get("checkpoints")
        if cps is None:
            return harness.default_checkpoints(T)
        return np.asarray(sorted(set(int(c) for c in cps)), dtype=np.int64)

    def meta(self) -> dict:
        return {"config_digest": self.digest, "version": __version__}


def _out_dir(exp: Experiment, override):
    return override or exp.out_cfg.get("dir", "out")


def cmd_run(exp: Experiment, seed: int, outdir: str) -> int:
    trace = smd.run(
        exp.problem, exp.geom, exp.bias, exp.noise, exp.sched,
        T=int(exp.run_cfg["T"]), seed=seed,
        x0=np.asarray(exp.run_cfg["x0"], dtype=np.float64)
        if "x0" in exp.run_cfg else None,
        audit=bool(exp.run_cfg.get("audit", False)),
    )
    rows = ["t,gap_x,gap_z,ber_residual,opt_residual"]
    for i, t in enumerate(trace.t):
        ber = (format_float(trace.ber_residual[i])
               if trace.ber_residual is not None else "")
        opt = (format_float(trace.opt_residual[i])
               if trace.opt_residual is not None else "")
        rows.append(
            f"{int(t)},{format_float(trace.gap_x[i])},"
            f"{format_float(trace.gap_z[i])},{ber},{opt}"
        )
    atomic_write(os.path.join(outdir, "trace.csv"), "\n".join(rows) + "\n")
    header = dict(trace.header)
    header.update(exp.meta())
    atomic_write(os.path.join(outdir, "trace_header.json"),
                 canonical_json(header) + "\n")
    return 0


def _theorem5_usable(exp: Experiment) -> bool:
    if exp.noise.nu1 is None or "nu2" not in exp.bounds_cfg:
        return False
    diag = omod.sub_gaussian_check(
        exp.noise, exp.problem.dim,
        n=int(exp.cfg["oracle"].get("n_check", 100_000)),
        rng=rng.trial_generator(987654321, 0),
    )
    if not diag.passed:
        print("note: noise failed the sub-Gaussian diagnostic; "
              "skipping sub-Gaussian bound comparison", file=sys.stderr)
    return diag.passed


def cmd_montecarlo(exp: Experiment, seed: int, outdir: str, check: bool) -> int:
    T = int(exp.run_cfg["T"])
    cps = exp.checkpoints(T)
    ts = harness.run_trials(
        exp.problem, exp.geom, exp.bias, exp.noise, exp.sched,
        n=int(exp.run_cfg.get("n_trials", 100)), T=T, checkpoints=cps,
        base_seed=seed, config_digest=exp.digest,
    )
    lines = []
    for i, trial in enumerate(ts.trial_ids):
        for j, t in enumerate(ts.checkpoints):
            lines.append(canonical_json(
                {"trial": int(trial), "t": int(t),
                 "gap_z": float(ts.gaps[i, j])}
            ))
    atomic_write(os.path.join(outdir, "trials.jsonl"),
                 "\n".join(lines) + "\n")

    params = exp.bound_params()
    eps_list = [float(e) for e in exp.bounds_cfg.get("eps", [0.1])]
    p_list = [float(p) for p in exp.bounds_cfg.get("p", [0.9])]
    use_t5 = _theorem5_usable(exp)
    kr = bmod.compute_K(params)
    violations = 0
    summary = {
        **exp.meta(), "n_trials": ts.n, "T": T,
        "checkpoints": [int(c) for c in cps],
        "K": kr.K, "K_err": kr.err, "K_diverged": kr.diverged,
        "eps": [], "rate_fit": None,
    }
    for eps in eps_list:
        t0 = None
        if not kr.diverged:
            t0 = bmod.corollary2_times(params, eps, p_list[0]).t0
        block = {"eps": eps, "t0": t0, "checkpoints": []}
        for t in cps:
            est = harness.tail_probability(ts, int(t), eps)
            rec = {
                "t": int(t), "successes": est.successes, "p_hat": est.p_hat,
                "ci_low": est.ci_low, "ci_high": est.ci_high,
            }
            if not kr.diverged:
                b4 = bmod.theorem4_bound(params, int(t), eps, t0=t0)
                v4 = harness.compare_bound(est, b4.clipped)
                rec.update(thm4_raw=b4.raw, thm4_clipped=b4.clipped,
                           thm4_applicable=b4.applicable,
                           thm4_consistent=v4.consistent,
                           thm4_margin=v4.margin)
                if b4.applicable and not v4.consistent:
                    violations += 1
                if use_t5:
                    b5 = bmod.theorem5_bound(params, int(t), eps, t0=t0)
                    v5 = harness.compare_bound(est, b5.clipped)
                    rec.update(thm5_raw=b5.raw, thm5_clipped=b5.clipped,
                               thm5_consistent=v5.consistent)
                    if b4.applicable and not v5.consistent:
                        violations += 1
            block["checkpoints"].append(rec)
        summary["eps"].append(block)
    fit_pts = cps[cps >= max(1, T // 100)]
    if fit_pts.size >= 4:
        rf = harness.fit_rate(ts, (int(fit_pts[0]), T))
        summary["rate_fit"] = {
            "slope": rf.slope, "stderr": rf.stderr,
            "n_points": rf.n_points, "degenerate": rf.degenerate,
        }
    atomic_write(os.path.join(outdir, "summary.json"),
                 canonical_json(summary) + "\n")
    if check and violations:
        print(f"check failed: {violations} bound violations", file=sys.stderr)
        return 3
    return 0


def cmd_bounds(exp: Experiment, outdir: str) -> int:
    params = exp.bound_params()
    kr = bmod.compute_K(params)
    eps_list = [float(e) for e in exp.bounds_cfg.get("eps", [0.1])]
    p_list = [float(p) for p in exp.bounds_cfg.get("p", [0.9])]
    use_t5 = params.nu1 is not None and params.nu2 is not None
    out = {
        **exp.meta(),
        "K": kr.K, "K_err": kr.err, "K_diverged": kr.diverged,
        "thresholds": [], "bound_curve": [],
    }
    for eps in eps_list:
        for p in p_list:
            entry = {"eps": eps, "p": p}
            if kr.diverged:
                entry["resolved"] = False
            else:
                c2 = bmod.corollary2_times(params, eps, p)
                entry.update(t0=c2.t0, t1=c2.t1, t2=c2.t2,
                             t_star=c2.t_star, resolved=c2.resolved)
                if use_t5:
                    c3 = bmod.corollary3_times(params, eps, p)
                    entry.update(cor3_t0=c3.t0, cor3_t1=c3.t1, cor3_t2=c3.t2,
                                 cor3_t_star=c3.t_star,
                                 cor3_resolved=c3.resolved)
            out["thresholds"].append(entry)
    if not kr.diverged:
        horizon = min(int(exp.run_cfg["T"]), params.T_max)
        eps0 = eps_list[0]
        for t in harness.default_checkpoints(horizon):
            row = {"t": int(t),
                   "thm4_raw": bmod.theorem4_bound(params, int(t), eps0).raw}
            if use_t5:
                row["thm5_raw"] = bmod.theorem5_bound(params, int(t), eps0).raw
            out["bound_curve"].append(row)
    atomic_write(os.path.join(outdir, "bounds.json"),
                 canonical_json(out) + "\n")
    return 0


def cmd_validate(exp: Experiment, seed: int, outdir: str) -> int:
    n = int(exp.cfg["oracle"].get("n_check", 100_000))
    x0 = exp.geom.set.analytic_center()
    gen = rng.trial_generator(seed, 0)
    mom = omod.estimate_moments(exp.bias, exp.noise, exp.problem, x0, 1,
                                max(n, 10_000), gen)
    report = {
        **exp.meta(),
        "moments": {
            "mean_dev": mom.mean_dev, "m2": mom.m2, "m4": mom.m4,
            "nu2_hat": mom.nu2_hat, "n": mom.n,
        },
        "declared_nu2_ok": (mom.m2 <= exp.noise.nu**2
                            if exp.noise.nu > 0 else None),
        "assumptions": {},
    }
    k = exp.sched.k
    report["assumptions"]["step_exponent_ok"] = bool(0.5 < k <= 1.0)
    partial, tail = omod.summability_partial_sum(
        exp.sched.alpha0, k, exp.bias
    )
    report["assumptions"]["bias_summability"] = {
        "partial_sum": partial, "tail": tail,
        "summable": bool(np.isfinite(tail)),
    }
    if exp.noise.nu1 is not None:
        diag = omod.sub_gaussian_check(exp.noise, exp.problem.dim, n,
                                       rng.trial_generator(seed, 1))
        report["sub_gaussian"] = {
            "passed": diag.passed, "worst_ratio": diag.worst_ratio,
        }
    atomic_write(os.path.join(outdir, "validate.json"),
                 canonical_json(report) + "\n")
    return 0


def dispatch(argv) -> int:
    ap = argparse.ArgumentParser(prog="smdlab")
    ap.add_argument("command",
                    choices=["run", "montecarlo", "bounds", "validate"])
    ap.add_argument("config", help="TOML experiment configuration")
    ap.add_argument("--seed", type=int, default=None,
                    help="override [run].seed")
    ap.add_argument("--out", default=None, help="override [output].dir")
    ap.add_argument("--check", action="store_true",
                    help="exit 3 on bound violations (montecarlo)")
    args = ap.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            exp = Experiment(parse_config(args.config))
            seed = (args.seed if args.seed is not None
                    else int(exp.run_cfg.get("seed", 0)))
            outdir = _out_dir(exp, args.out)
            if args.command == "run":
                return cmd_run(exp, seed, outdir)
            if args.command == "montecarlo":
                return cmd_montecarlo(exp, seed, outdir, args.check)
            if args.command == "bounds":
                return cmd_bounds(exp, outdir)
            return cmd_validate(exp, seed, outdir)
    except (ConfigurationError, InputError, tomllib.TOMLDecodeError,
            KeyError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
