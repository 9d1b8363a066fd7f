"""Command-line driver: `kpzlab <command> [target] [key=value | --key value]...`.

Parameters come from an optional flat config file (`--config path`, one
"key = value" per line), then positional key=value tokens, then --key flags.
Every run appends one JSON record to the store named by $KPZLAB_STORE
(default ./kpzlab_results.jsonl). Exit codes: 0 pass, 1 fail or module error,
2 configuration error.
"""
import datetime as _dt
import json
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from filelock import FileLock

from . import __version__
from .errors import ConfigError, KPZLabError

COMMON = {"seed": int, "replicas": int, "output": str, "format": str, "workers": int}


# --- value parsing -------------------------------------------------------------

def _ints(v):
    if isinstance(v, (list, tuple)):
        return tuple(int(x) for x in v)
    return tuple(int(x) for x in str(v).replace(" ", "").split(",") if x != "")


def _floats(v):
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    return tuple(float(x) for x in str(v).replace(" ", "").split(",") if x != "")


def _complex(v):
    return complex(str(v).replace(" ", "").replace("i", "j"))


SCHEMAS = {
    ("simulate", "tasep"): {"t": float, "n": int},
    ("simulate", "qtasep"): {"t": float, "n": int, "q": float, "a": float},
    ("simulate", "asep"): {"t": float, "p": float, "y": int},
    ("simulate", "qboson"): {"t": float, "q": float, "state": _ints},
    ("simulate", "gt"): {"t": float, "q": float, "N": int, "a": float},
    ("simulate", "oy"): {"tau": float, "n": int, "method": str, "dt": float},
    ("moment", "qtasep"): {"t": float, "q": float, "n": _ints, "a": _floats, "method": str},
    ("moment", "asep"): {"t": float, "p": float, "y": _ints, "method": str, "power": int},
    ("moment", "she"): {"t": float, "x": _ints},
    ("fredholm", "qtasep"): {"zeta": _complex, "n": int, "t": float, "q": float, "form": str},
    ("fredholm", "sd"): {"u": _complex, "n": int, "tau": float},
    ("fredholm", "asep"): {"zeta": _complex, "y": int, "t": float, "p": float},
    ("fredholm", "kpz"): {"zeta": _complex, "t": float},
    ("fredholm", "fgue"): {"s": float, "nodes": int, "method": str},
    ("verify", "duality"): {"k": int, "n": _ints, "t": float, "q": float},
    ("verify", "biorthogonality"): {"k": int, "lo": int, "hi": int, "q": float, "nodes": int},
    ("verify", "commutator"): {"n": int, "k": int, "q": float, "a": _floats},
    ("verify", "algebra"): {"M": int, "cap": int, "q": float},
    ("verify", "free_evolution"): {"k": int, "n": _ints, "t": float, "q": float},
    ("verify", "criterion"): {"id": int, "scale": str},
    ("verify", "regression"): {"suite": str, "only": _ints, "sentinel_tol": float,
                               "artifacts": str},
    ("asymptotics", "lyapunov"): {"p": int, "nu": float},
    ("asymptotics", "tilde1"): {"nu": float},
    ("asymptotics", "intermittency"): {"nu": float, "pmax": int},
    ("asymptotics", "constants"): {"nu": float},
    ("asymptotics", "ks"): {"model": str, "L": float, "t": float, "p": float, "q": float,
                            "n": int},
    ("table", "fgue"): {"smin": float, "smax": float, "step": float, "nodes": int},
    ("table", "lyapunov"): {"nus": _floats},
}

DEFAULTS = {
    ("simulate", "tasep"): {"t": 10.0, "replicas": 1000, "seed": 0},
    ("simulate", "qtasep"): {"t": 1.0, "n": 1, "q": 0.5, "a": 1.0, "replicas": 1000, "seed": 0},
    ("simulate", "asep"): {"t": 1.0, "p": 0.3, "y": 0, "replicas": 1000, "seed": 0},
    ("simulate", "qboson"): {"t": 1.0, "q": 0.5, "state": (2, 1), "replicas": 1000, "seed": 0},
    ("simulate", "gt"): {"t": 1.0, "q": 0.5, "N": 3, "a": 1.0, "replicas": 1000, "seed": 0},
    ("simulate", "oy"): {"tau": 1.0, "n": 1, "method": "simplex", "replicas": 1000, "seed": 0},
    ("moment", "qtasep"): {"t": 1.0, "q": 0.5, "n": (1,), "method": "quadrature"},
    ("moment", "asep"): {"t": 1.0, "p": 0.3, "y": (0,), "method": "quadrature"},
    ("moment", "she"): {"t": 1.0, "x": (0,)},
    ("fredholm", "qtasep"): {"zeta": -0.05, "n": 2, "t": 1.0, "q": 0.5, "form": "mb"},
    ("fredholm", "sd"): {"u": 1.0, "n": 1, "tau": 1.0},
    ("fredholm", "asep"): {"zeta": -0.02, "y": 0, "t": 1.0, "p": 0.3},
    ("fredholm", "kpz"): {"zeta": 1.0, "t": 1.0},
    ("fredholm", "fgue"): {"s": 0.0, "nodes": 64, "method": "gl"},
    ("verify", "duality"): {"k": 2, "n": (2, 1), "t": 1.0, "q": 0.5, "replicas": 100000,
                            "seed": 0},
    ("verify", "biorthogonality"): {"k": 2, "lo": -2, "hi": 3, "q": 0.5, "nodes": 256},
    ("verify", "commutator"): {"n": 2, "k": 2, "q": 0.4, "a": (0.7, 1.1, 1.6)},
    ("verify", "algebra"): {"M": 2, "cap": 3, "q": 0.5},
    ("verify", "free_evolution"): {"k": 2, "n": (2, 1), "t": 1.0, "q": 0.5},
    ("verify", "criterion"): {"id": 13, "scale": "full"},
    ("verify", "regression"): {"suite": "fast", "sentinel_tol": 1e-10,
                               "artifacts": "kpzlab_artifacts", "workers": 1},
    ("asymptotics", "lyapunov"): {"p": 1, "nu": 1.0},
    ("asymptotics", "tilde1"): {"nu": 1.0},
    ("asymptotics", "intermittency"): {"nu": 1.0, "pmax": 4},
    ("asymptotics", "constants"): {"nu": 1.0},
    ("asymptotics", "ks"): {"model": "fgue", "L": 2000.0, "t": 2000.0, "p": 0.3, "q": 0.5,
                            "n": 50, "replicas": 1000, "seed": 0},
    ("table", "fgue"): {"smin": -8.0, "smax": 4.0, "step": 0.05, "nodes": 64},
    ("table", "lyapunov"): {"nus": (0.5, 1.0, 1.5, 2.0, 3.0)},
}


def parse_config_file(path):
    """Flat `key = value` lines; blank lines and '#' comments ignored."""
    out = {}
    with open(path) as fh:
        for i, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{i}: expected 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def parse_args(argv):
    """argv -> (command, target, raw parameter dict)."""
    if not argv or argv[0] in ("-h", "--help"):
        raise ConfigError(__doc__.strip())
    command = argv[0]
    if command not in {c for c, _ in SCHEMAS}:
        raise ConfigError(f"unknown command {command!r}")
    target, file_cfg, pos, flags = None, {}, {}, {}
    i = 1
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--"):
            key = tok[2:]
            if "=" in key:
                key, val = key.split("=", 1)
            elif i + 1 < len(argv) and not argv[i + 1].startswith("--"):
                val = argv[i + 1]
                i += 1
            else:
                val = "true"
            if key == "config":
                file_cfg = parse_config_file(val)
            else:
                flags[key] = val
        elif "=" in tok:
            k, v = tok.split("=", 1)
            pos[k] = v
        elif target is None:
            target = tok
        else:
            raise ConfigError(f"unexpected token {tok!r}")
        i += 1
    raw = {**file_cfg, **pos, **flags}
    if target is None:
        target = raw.pop("target", None)
    if target is None:
        raise ConfigError(f"{command}: missing target")
    return command, target, raw


def build_config(command, target, raw):
    """Validate and type the parameters; unknown keys are a ConfigError."""
    key = (command, target)
    if key not in SCHEMAS:
        known = sorted(t for c, t in SCHEMAS if c == command)
        raise ConfigError(f"unknown target {target!r} for {command}; expected one of {known}")
    schema = {**COMMON, **SCHEMAS[key]}
    cfg = dict(DEFAULTS.get(key, {}))
    for k, v in raw.items():
        if k not in schema:
            raise ConfigError(f"unknown key {k!r} for {command} {target}")
        try:
            cfg[k] = schema[k](v)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for {k!r}: {v!r} ({e})") from None
    fmt = cfg.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    if "replicas" in cfg and cfg["replicas"] < 1:
        raise ConfigError("replicas must be >= 1")
    if "seed" in cfg and not (0 <= cfg["seed"] < 2 ** 64):
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return cfg


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


# --- dispatch ------------------------------------------------------------------------

def _simulate(target, c):
    from . import processes as P
    from .processes.ensemble import summarize
    from .rng import SeedSpec
    R, seed = c["replicas"], c["seed"]
    if target == "qtasep":
        X = P.qtasep_positions_batch(c["q"], c["a"], c["n"], c["t"], seed, R)
        xn = X[:, -1]
        obs = {f"x_{c['n']}": summarize(xn), f"q^(x_{c['n']}+{c['n']})":
               summarize(c["q"] ** (xn + c["n"]).astype(float), bins=20)}
        return {"replicas": R, "observables": obs, "seed": {"master": seed}}, None
    if target == "tasep":
        n = c.get("n") or P.light_cone_particles(c["t"])

        def fn(sd):
            cfg = P.simulate_tasep(n, c["t"], sd)
            return {"N_0": cfg.count_at_or_right(0)}
    elif target == "asep":
        qr = 1.0 - c["p"]

        def fn(sd):
            cfg = P.simulate_asep(c["p"], qr, c["t"], sd, y_min=c["y"])
            return {f"N_{c['y']}": P.asep_N(cfg, c["y"]),
                    f"Qtilde_{c['y']}": P.asep_Qtilde(cfg, c["y"], c["p"] / qr)}
    elif target == "qboson":
        from .processes.qboson import ordered_to_occupation

        def fn(sd):
            cfg = P.simulate_qboson(c["q"], ordered_to_occupation(c["state"]), c["t"], sd)
            return {"sum_positions": float(np.sum(cfg.meta["ordered"]))}
    elif target == "gt":
        def fn(sd):
            e = P.simulate_gt_dynamics(c["q"], c["a"], c["N"], c["t"], sd).edge()
            return {f"edge_{m + 1}": int(v) for m, v in enumerate(e)}
    elif target == "oy":
        if c["method"] == "simplex":
            return P.simulate_oy_simplex(c["n"], c["tau"], R, seed).to_dict(), None

        def fn(sd):
            return {"z": float(P.simulate_oy_sde(c["n"], c["tau"], c.get("dt"), sd)[1][-1])}
    res = P.run_ensemble(fn, R, seed, params={"model": target},
                         workers=c.get("workers", 1))
    return res.to_dict(), None


def _moment(target, c):
    from . import macdonald, moments as M
    meth = c.get("method", "quadrature")
    if target == "qtasep":
        q = M.MomentQuery("qtasep", len(c["n"]), c["n"], c["t"], {"q": c["q"]}, a=c.get("a"))
        if meth == "quadrature":
            return M.qtasep_moment(q).to_dict(), None
        if meth == "residue":
            return M.qtasep_moment_residue(q).to_dict(), None
        if meth == "duality":
            return {"value_re": M.duality_moment(c["n"], c["t"], c["q"]), "method": meth}, None
        if meth == "operators":
            a = c.get("a") or (1.0,) * c["n"][0]
            v = (macdonald.expectation_homogeneous(len(c["n"]), c["n"], c["t"], c["q"])
                 if c.get("a") is None else
                 macdonald.expectation_via_operators(len(c["n"]), c["n"], c["t"], c["q"], a))
            return {"value_re": v.real, "value_im": v.imag, "method": meth}, None
        raise ConfigError(f"unknown method {meth!r}")
    if target == "asep":
        params = {"p": c["p"], "q_rate": 1.0 - c["p"]}
        if c.get("power"):
            if len(c["y"]) != 1:
                raise ConfigError("power= needs a single site y")
            return M.asep_qmoment_expansion(c["power"], c["y"][0], c["t"], params).to_dict(), None
        q = M.MomentQuery("asep", len(c["y"]), c["y"], c["t"], params)
        return M.asep_moment(q).to_dict(), None
    q = M.MomentQuery("she", len(c["x"]), c["x"], c["t"])
    return M.she_moment(q).to_dict(), None


def _fredholm(target, c):
    from . import fredholm as F
    if target == "qtasep":
        v = F.eq_laplace_qtasep(c["zeta"], c["n"], c["t"], c["q"], form=c["form"])
    elif target == "sd":
        v = F.laplace_sd(c["u"], c["n"], c["tau"])
    elif target == "asep":
        v = F.eq_laplace_asep(c["zeta"], c["y"], c["t"], c["p"], 1.0 - c["p"])
    elif target == "kpz":
        v = F.laplace_kpz(c["zeta"], c["t"])
    else:
        v = complex(F.f_gue(c["s"], c["nodes"], c["method"]))
    return {"kind": target, "value_re": v.real, "value_im": v.imag}, None


def _run_criterion(args):
    from . import acceptance
    cid, scale = args
    try:
        return acceptance.CRITERIA[cid](scale)
    except Exception as e:  # a crashing criterion is a FAIL, reported verbatim
        return {"criterion": cid, "title": acceptance.TITLES[cid], "verdict": "FAIL",
                "runtime": 0.0, "error": f"{type(e).__name__}: {e}", "checks": []}


def regression(suite="fast", only=None, sentinel_tol=1e-10, artifacts=None, workers=1):
    """Run the acceptance checks; returns (summary, all_pass)."""
    from . import acceptance, asymptotics, fredholm
    if suite not in ("fast", "full"):
        raise ConfigError("suite must be fast or full")
    ids = list(only) if only else list(acceptance.FAST if suite == "fast" else acceptance.CRITERIA)
    bad = [i for i in ids if i not in acceptance.CRITERIA]
    if bad:
        raise ConfigError(f"unknown criteria {bad}")
    jobs = [(i, suite) for i in ids]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            recs = list(ex.map(_run_criterion, jobs))
    else:
        recs = [_run_criterion(j) for j in jobs]
    g = asymptotics.lyapunov_gamma_p(1, 2.0)
    ref = -1.0 + 2.0 - 2.0 * np.log(2.0)
    sentinel = {"check": "sentinel gamma_1(2) closed form", "error": abs(g - ref),
                "tol": sentinel_tol, "ok": bool(abs(g - ref) < sentinel_tol)}
    outputs = {}
    if suite == "full" and artifacts:
        os.makedirs(artifacts, exist_ok=True)
        outputs["lyapunov_csv"] = asymptotics.write_lyapunov_csv(
            os.path.join(artifacts, "lyapunov.csv"))
        outputs["fgue_csv"] = fredholm.write_fgue_csv(os.path.join(artifacts, "fgue.csv"))
        ks_rows = [r for rec in recs for r in rec.get("ks_rows", [])]
        if ks_rows:
            outputs["ks_csv"] = asymptotics.write_ks_csv(os.path.join(artifacts, "ks.csv"), ks_rows)
    ok = sentinel["ok"] and all(r["verdict"] == "PASS" for r in recs)
    summary = {"suite": suite, "criteria": [{k: r[k] for k in ("criterion", "title", "verdict",
                                                              "runtime")} for r in recs],
               "sentinel": sentinel, "artifacts": outputs, "details": recs}
    for r in recs:
        print(acceptance.line(r), file=sys.stderr)
    return summary, ok


def _verify(target, c):
    from . import acceptance, bethe, macdonald
    if target == "duality":
        r = bethe.check_duality(c["k"], c["n"], c["t"], c["q"], c["replicas"], c["seed"],
                                workers=c.get("workers", 1))
        return r, r["verdict"] == "PASS"
    if target == "biorthogonality":
        w = bethe.biorthogonality(c["k"], (c["lo"], c["hi"]), c["q"], c["nodes"])
        return {"check": "biorthogonality", "worst": w, "tolerance": 1e-8}, w < 1e-8
    if target == "commutator":
        import mpmath as mp
        f = lambda x: mp.exp(mp.fsum(x) / 2)  # noqa: E731
        r = macdonald.commutator_check(c["n"], c["k"], c["q"], f, c["a"])
        return r, r["verdict"] == "PASS"
    if target == "algebra":
        r = bethe.qboson_algebra_check(c["M"], c["cap"], c["q"])
        return r, r["verdict"] == "PASS"
    if target == "free_evolution":
        r = bethe.check_free_evolution_and_boundary(c["k"], c["n"], c["t"], c["q"])
        return r, r["verdict"] == "PASS"
    if target == "criterion":
        if c["id"] not in acceptance.CRITERIA:
            raise ConfigError(f"unknown criterion {c['id']}")
        r = _run_criterion((c["id"], c["scale"]))
        return r, r["verdict"] == "PASS"
    return regression(c["suite"], c.get("only"), c["sentinel_tol"], c.get("artifacts"),
                      c.get("workers", 1))


def _asymptotics(target, c):
    from . import asymptotics as A
    if target == "lyapunov":
        return {"p": c["p"], "nu": c["nu"], "gamma_p": A.lyapunov_gamma_p(c["p"], c["nu"])}, None
    if target == "tilde1":
        return {"nu": c["nu"], "gamma_tilde_1": A.lyapunov_tilde1(c["nu"]),
                "s": A.tilde1_minimizer(c["nu"])}, None
    if target == "intermittency":
        r = A.intermittency_report(c["nu"], c["pmax"])
        return r, r["verdict"] == "PASS"
    if target == "constants":
        g, d = A.kpz_constants(c["nu"])
        return {"nu": c["nu"], "center": g, "scale": d}, None
    model, R, seed = c["model"], c["replicas"], c["seed"]
    if model == "tasep":
        x, thr, size = A.tasep_fluctuations(int(c["L"]), R, seed), A.KS_TASEP, c["L"]
    elif model == "asep":
        x, thr, size = A.asep_fluctuations(c["t"], c["p"], R, seed), A.KS_ASEP, c["t"]
    elif model == "qtasep":
        x, thr, size = A.qtasep_fluctuations(c["n"], c["t"], c["q"], R, seed), A.KS_TASEP, c["t"]
    elif model == "fgue":
        x, thr, size = A.sample_fgue(R, seed), 0.02 if R >= 10000 else 2.0 / np.sqrt(R), R
    else:
        raise ConfigError(f"unknown model {model!r}")
    ks, rep = A.ks_vs_fgue(x)
    rep.update({"model": model, "L": size, "threshold": thr,
                "shape_only": model == "qtasep"})
    return rep, ks < thr


def _table(target, c):
    from . import asymptotics as A, fredholm as F
    out = c.get("output")
    if target == "fgue":
        s, Fv, d = F.fgue_table(c["smin"], c["smax"], c["step"], c["nodes"])
        rows = [["s", "F", "density"]] + [[f"{a:.12g}", f"{b:.12g}", f"{e:.12g}"]
                                          for a, b, e in zip(s, Fv, d)]
    else:
        rows = [["nu", "gamma_tilde_1", "gamma_1", "gamma_2/2", "gamma_3/3"]]
        for nu in c["nus"]:
            vals = [nu, A.lyapunov_tilde1(nu)] + [A.lyapunov_gamma_p(p, nu) / p for p in (1, 2, 3)]
            rows.append([f"{v:.12g}" for v in vals])
    text = "\n".join(",".join(r) for r in rows) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return {"table": target, "rows": len(rows) - 1, "columns": rows[0], "output": out}, None


DISPATCH = {"simulate": _simulate, "moment": _moment, "fredholm": _fredholm,
            "verify": _verify, "asymptotics": _asymptotics, "table": _table}


def _flatten(d, prefix=""):
    out = []
    if isinstance(d, dict):
        for k in sorted(d):
            out += _flatten(d[k], f"{prefix}{k}.")
    elif isinstance(d, list) and len(d) <= 16 and all(not isinstance(v, (dict, list)) for v in d):
        out.append((prefix[:-1], ";".join(str(v) for v in d)))
    elif not isinstance(d, list):
        out.append((prefix[:-1], d))
    return out


def render(record, fmt):
    """JSON text of the record, or a key,value CSV of its scalar fields."""
    if fmt == "json":
        return json.dumps(record, sort_keys=True, indent=2)
    rows = ["key,value"] + [f"{k},{v}" for k, v in _flatten(record)]
    return "\n".join(rows)


def store_path():
    return os.environ.get("KPZLAB_STORE", "kpzlab_results.jsonl")


def append_record(record, path=None):
    """Append one JSON line under an advisory lock; the store is never rewritten."""
    path = path or store_path()
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with FileLock(path + ".lock"):
        with open(path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return path


def run(command, target, cfg):
    """Dispatch one validated config; returns (record, exit_code)."""
    t0 = time.time()
    record = {"command": command, "target": target, "config": _jsonable(cfg),
              "version": __version__,
              "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    try:
        result, verdict = DISPATCH[command](target, cfg)
        record["result"] = _jsonable(result)
        record["verdict"] = None if verdict is None else ("PASS" if verdict else "FAIL")
        code = 0 if verdict in (None, True) else 1
    except ConfigError:
        raise
    except KPZLabError as e:
        record["error"] = {"type": type(e).__name__, "message": str(e)}
        record["verdict"] = "ERROR"
        code = 1
    except Exception as e:  # unexpected failures are recorded, never swallowed silently
        record["error"] = {"type": type(e).__name__, "message": str(e),
                           "traceback": traceback.format_exc(limit=5)}
        record["verdict"] = "ERROR"
        code = 1
    record["wall_time"] = time.time() - t0
    return record, code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        command, target, raw = parse_args(argv)
        cfg = build_config(command, target, raw)
        record, code = run(command, target, cfg)
    except ConfigError as e:
        print(f"kpzlab: config error: {e}", file=sys.stderr)
        return 2
    append_record(record)
    if command != "table":
        text = render(record, cfg.get("format", "json"))
        if cfg.get("output"):
            with open(cfg["output"], "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
