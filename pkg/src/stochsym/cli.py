"""Command-line interface: a thin client over the HTTP service.

Every run prints a single JSON report to stdout with a ``status`` field and
exits 0 on success, 1 on domain/validation errors (structured error object)
and 2 on usage errors.  By default requests are dispatched to the service
app in-process; ``--server URL`` sends them to a running ``stochsym serve``
instead.  CSV side outputs are written by the client from the returned
arrays.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys
from datetime import datetime, timezone

import httpx

from . import __version__


def _call_service(path: str, payload: dict, server: str | None):
    if server:
        r = httpx.post(server.rstrip("/") + path, json=payload, timeout=600.0)
        return r.status_code, r.json()

    from .service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://stochsym.internal") as client:
            r = await client.post(path, json=payload, timeout=600.0)
            return r.status_code, r.json()

    return asyncio.run(go())


def _load_equation(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "drift" not in doc or "domain" not in doc:
        raise ValueError(f"{path} is not an equation document "
                         '(expect {"drift": ..., "sigma": ..., "domain": [a, b]})')
    return {"drift": doc["drift"], "sigma": doc.get("sigma", "1"),
            "domain": doc["domain"]}


def _floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise ValueError(f"{what} expects {n} comma-separated values, got {text!r}")
    return [float(p) for p in parts]


def _grid(text: str) -> tuple[float, float, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--grid expects xmin,xmax,Nx, got {text!r}")
    return float(parts[0]), float(parts[1]), int(parts[2])


def _gaussian_init(text: str) -> tuple[float, float]:
    spec = text
    if spec.startswith("gaussian:"):
        spec = spec[len("gaussian:"):]
    return tuple(_floats(spec, 2, "--init"))


def _write_csv(path: str, header: list[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _emit(args, command: str, config: dict, payload: dict) -> int:
    report = dict(payload)
    report["command"] = command
    report["config"] = config
    report["version"] = report.get("version", __version__)
    if not getattr(args, "no_timestamp", False):
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    print(json.dumps(report, sort_keys=True))
    return 0 if report.get("status") == "ok" else 1


def _fail(args, command: str, kind: str, message: str) -> int:
    return _emit(args, command, {}, {"status": "error", "kind": kind,
                                     "message": message})


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_classify(args) -> int:
    eq = _load_equation(args.equation)
    payload = {"equation": eq}
    if args.tspan:
        payload["tspan"] = _floats(args.tspan, 2, "--tspan")
    code, body = _call_service("/classify", payload, args.server)
    return _emit(args, "classify", {"equation_file": args.equation,
                                    "tspan": payload.get("tspan", [0.0, 1.0])}, body)


def _cmd_normalize(args) -> int:
    eq = _load_equation(args.equation)
    code, body = _call_service("/normalize",
                               {"equation": eq, "n_samples": args.samples},
                               args.server)
    if body.get("status") == "ok" and args.out:
        _write_csv(args.out, ["x", "xi"], body["transform_samples"])
    return _emit(args, "normalize", {"equation_file": args.equation,
                                     "samples": args.samples, "out": args.out}, body)


def _cmd_kozlov(args) -> int:
    eq = _load_equation(args.equation)
    payload = {"equation": eq, "seed": args.seed, "dt": args.dt, "T": args.T,
               "n_paths": args.paths, "x0": args.x0}
    code, body = _call_service("/kozlov", payload, args.server)
    if body.get("status") == "ok":
        if args.out:
            rows = []
            for p in body["paths"]:
                for t, y, x in zip(body["times"], p["y"], p["x"]):
                    rows.append([p["path_id"], t, y, x])
            _write_csv(args.out, ["path_id", "t", "y", "x"], rows)
        body = {k: v for k, v in body.items() if k not in ("paths", "times")}
    config = {k: getattr(args, k) for k in ("seed", "dt", "T", "paths", "x0", "out")}
    config["equation_file"] = args.equation
    return _emit(args, "kozlov", config, body)


def _cmd_simulate(args) -> int:
    eq = _load_equation(args.equation)
    payload = {"equation": eq, "n_paths": args.N, "dt": args.dt, "T": args.T,
               "seed": args.seed, "x0": args.x0, "workers": args.workers,
               "return_paths": bool(args.out)}
    if args.init:
        payload["init_gaussian"] = _gaussian_init(args.init)
    code, body = _call_service("/simulate", payload, args.server)
    if body.get("status") == "ok" and args.out:
        rows = []
        for pid, row in enumerate(body["paths"]):
            for t, x in zip(body["times"], row):
                rows.append([pid, t, x])
        _write_csv(args.out, ["path_id", "t", "x"], rows)
        body = {k: v for k, v in body.items() if k not in ("paths", "times")}
    config = {k: getattr(args, k) for k in ("N", "dt", "T", "seed", "x0",
                                            "init", "workers", "out")}
    config["equation_file"] = args.equation
    return _emit(args, "simulate", config, body)


def _cmd_fp_solve(args) -> int:
    eq = _load_equation(args.equation)
    payload = {"equation": eq, "grid": _grid(args.grid), "dt": args.dt,
               "T": args.T, "init_gaussian": _gaussian_init(args.init)}
    if args.snapshots:
        payload["snapshot_times"] = [float(s) for s in args.snapshots.split(",")]
    code, body = _call_service("/fp/solve", payload, args.server)
    if body.get("status") == "ok":
        if args.out:
            rows = []
            for snap in body["snapshots"]:
                for x, u in zip(snap["x"], snap["u"]):
                    rows.append([snap["t"], x, u])
            _write_csv(args.out, ["t", "x", "u"], rows)
        body = {**{k: v for k, v in body.items() if k != "snapshots"},
                "n_snapshots": len(body["snapshots"])}
    config = {"equation_file": args.equation, "grid": args.grid, "dt": args.dt,
              "T": args.T, "init": args.init, "snapshots": args.snapshots,
              "out": args.out}
    return _emit(args, "fp solve", config, body)


def _cmd_fp_classify(args) -> int:
    eq = _load_equation(args.equation)
    code, body = _call_service("/fp/classify", {"equation": eq}, args.server)
    return _emit(args, "fp classify", {"equation_file": args.equation}, body)


def _cmd_fp_verify(args) -> int:
    eq = _load_equation(args.equation)
    with open(args.field, "r", encoding="utf-8") as fh:
        field = json.load(fh)
    payload = {"equation": eq, "field": field, "tolerance": args.tolerance}
    code, body = _call_service("/fp/verify", payload, args.server)
    return _emit(args, "fp verify", {"equation_file": args.equation,
                                     "field_file": args.field,
                                     "tolerance": args.tolerance}, body)


def _cmd_weber_gen(args) -> int:
    payload = {"mu": _floats(args.mu, 3, "--mu"),
               "domain": _floats(args.domain, 2, "--domain"),
               "branch": args.branch, "f0": args.f0, "n_samples": args.samples}
    code, body = _call_service("/weber/gen", payload, args.server)
    if body.get("status") == "ok" and args.out:
        _write_csv(args.out, ["x", "f"], body["samples"])
    config = {k: getattr(args, k) for k in ("mu", "domain", "branch", "f0",
                                            "samples", "out")}
    return _emit(args, "weber gen", config, body)


def _cmd_crossval(args) -> int:
    eq = _load_equation(args.equation)
    payload = {"equation": eq, "n_paths": args.N, "dt": args.dt, "T": args.T,
               "seed": args.seed, "init_gaussian": _gaussian_init(args.init),
               "workers": args.workers}
    if args.grid:
        payload["grid"] = _grid(args.grid)
    code, body = _call_service("/crossval", payload, args.server)
    config = {k: getattr(args, k) for k in ("N", "dt", "T", "seed", "grid",
                                            "init", "workers")}
    config["equation_file"] = args.equation
    return _emit(args, "crossval", config, body)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochsym",
        description="Symmetry classification and integration toolkit for "
                    "scalar Ito equations and their Fokker-Planck equations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--server", default=None,
                       help="URL of a running service (default: in-process)")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the timestamp field (reproducible reports)")

    p = sub.add_parser("classify", help="classify an Ito equation's symmetry type")
    p.add_argument("equation", help="equation JSON file")
    p.add_argument("--tspan", default=None, help="time range a,b for "
                   "time-dependent classification (default 0,1)")
    common(p)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("normalize", help="reduce the noise coefficient to one")
    p.add_argument("equation")
    p.add_argument("--samples", type=int, default=33,
                   help="transform sample table size")
    p.add_argument("--out", default=None, help="CSV output (x, xi)")
    common(p)
    p.set_defaults(fn=_cmd_normalize)

    p = sub.add_parser("kozlov", help="integrate pathwise through the symmetry")
    p.add_argument("equation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--x0", type=float, default=None,
                   help="initial state (default: domain midpoint)")
    p.add_argument("--out", default=None, help="CSV output (path_id, t, y, x)")
    common(p)
    p.set_defaults(fn=_cmd_kozlov)

    p = sub.add_parser("simulate", help="Euler-Maruyama ensemble")
    p.add_argument("equation")
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--init", default=None,
                   help="gaussian:mean,sd initial distribution (overrides --x0)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV output (path_id, t, x)")
    common(p)
    p.set_defaults(fn=_cmd_simulate)

    fp = sub.add_parser("fp", help="Fokker-Planck operations")
    fpsub = fp.add_subparsers(dest="fp_command", required=True)

    p = fpsub.add_parser("solve", help="Crank-Nicolson density solve")
    p.add_argument("equation")
    p.add_argument("--grid", required=True, help="xmin,xmax,Nx")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--init", default="gaussian:0,0.5", help="gaussian:mean,sd")
    p.add_argument("--snapshots", default=None, help="comma-separated times")
    p.add_argument("--out", default=None, help="CSV output (t, x, u)")
    common(p)
    p.set_defaults(fn=_cmd_fp_solve)

    p = fpsub.add_parser("classify", help="symmetry class of the FP equation")
    p.add_argument("equation")
    common(p)
    p.set_defaults(fn=_cmd_fp_classify)

    p = fpsub.add_parser("verify", help="residual-check a candidate vector field")
    p.add_argument("equation")
    p.add_argument("field", help='field JSON file {"tau": ..., "xi": ..., '
                   '"phi1": ..., "phi0": ...}')
    p.add_argument("--tolerance", type=float, default=1e-8)
    common(p)
    p.set_defaults(fn=_cmd_fp_verify)

    weber = sub.add_parser("weber", help="maximal-symmetry drift machinery")
    wsub = weber.add_subparsers(dest="weber_command", required=True)

    p = wsub.add_parser("gen", help="generate a drift with gamma_xx = 0")
    p.add_argument("--mu", required=True, help="mu0,mu1,mu2")
    p.add_argument("--domain", required=True, help="a,b")
    p.add_argument("--branch", default="auto",
                   choices=["auto", "hermite", "numeric"])
    p.add_argument("--f0", type=float, default=0.0,
                   help="u'(a) for the numeric branch")
    p.add_argument("--samples", type=int, default=65)
    p.add_argument("--out", default=None, help="CSV output (x, f)")
    common(p)
    p.set_defaults(fn=_cmd_weber_gen)

    p = sub.add_parser("crossval", help="ensemble density vs FP solve")
    p.add_argument("equation")
    p.add_argument("--N", type=int, default=20000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", default=None, help="xmin,xmax,Nx")
    p.add_argument("--init", default="gaussian:0,0.5")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(fn=_cmd_crossval)

    p = sub.add_parser("serve", help="run the HTTP service under uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8723)
    p.set_defaults(fn=_cmd_serve)

    return parser


_VALUED_FLAGS = {"--domain", "--mu", "--grid", "--tspan", "--init",
                 "--snapshots", "--x0", "--f0"}


def _merge_negative_values(argv: list[str]) -> list[str]:
    """Glue values like "-1,3" onto their flag so argparse does not mistake
    them for options (supports the plain `--domain -1,3` spelling)."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUED_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args = build_parser().parse_args(_merge_negative_values(argv))
    command = args.command
    try:
        return args.fn(args)
    except (OSError, json.JSONDecodeError) as e:
        return _fail(args, command, "io", str(e))
    except ValueError as e:
        return _fail(args, command, "validation", str(e))
    except httpx.HTTPError as e:
        return _fail(args, command, "connection", str(e))


if __name__ == "__main__":
    sys.exit(main())
