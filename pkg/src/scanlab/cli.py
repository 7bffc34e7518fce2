"""The `scanlab` command line tool.

Subcommands: net, enumerate, netbuild, calibrate, test, grow, sweep, rates.
Every subcommand is a pure function of its flags, input files and --seed;
exit codes: 0 success, 2 config error, 3 capacity error.  `--out -` streams
to stdout.  Sweep configs are flat `key = value` text; unknown keys are
rejected and the fully resolved config (defaults included) is echoed into
the output as # comment lines.
"""

from __future__ import annotations

import argparse
import sys
import time
from contextlib import contextmanager

from . import clusters as cl
from . import detect, growth, metric, models, network, sim
from .errors import CapacityError, ConfigError
from .rng import derive_seed, rng_from_seed


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


# ---------------------------------------------------------------------------
# net


def _cmd_net(args) -> int:
    if args.mode == "lattice":
        if args.side is None:
            raise ConfigError("net --mode lattice requires --side")
        net = network.make_lattice(args.d, args.side)
        if args.rescale:
            net = network.rescale_lattice(net)
    else:
        if args.m is None:
            raise ConfigError("net --mode cloud requires --m")
        net = network.make_uniform_cloud(args.d, args.m, args.seed)
    with _open_out(args.out) as fh:
        network.write_nodeset(net, fh)
    return 0


# ---------------------------------------------------------------------------
# enumerate


def _stream_for_family(net, args):
    fam = args.family
    meta = {"family": fam}
    if fam == "balls":
        if args.lam is None:
            raise ConfigError("enumerate balls requires --lam")
        meta["lambda"] = args.lam
        return cl.enumerate_balls(net, args.lam, size_cap=args.size_cap), meta
    if fam == "thick":
        if args.lam_lo is None or args.lam_hi is None:
            raise ConfigError("enumerate thick requires --lam-lo and --lam-hi")
        params = cl.ThickParams(
            lam_lo=args.lam_lo,
            lam_hi=args.lam_hi,
            kappa=args.kappa,
            grid_eps=args.grid_eps,
        )
        meta.update(lam_lo=args.lam_lo, lam_hi=args.lam_hi, kappa=args.kappa,
                    grid_eps=args.grid_eps)
        return cl.enumerate_thick(net, params, size_cap=args.size_cap), meta
    if fam == "tubes":
        if args.r is None:
            raise ConfigError("enumerate tubes requires --r")
        params = cl.ThinParams(
            r=args.r, alpha=args.alpha, kappa=args.kappa,
            n_control=args.ncontrol, value_pitch=args.value_pitch,
        )
        meta.update(r=args.r, alpha=args.alpha, kappa=args.kappa,
                    n_control=args.ncontrol)
        return cl.enumerate_tubes(net, params, size_cap=args.size_cap), meta
    if fam == "bands":
        if args.ell is None or args.h is None:
            raise ConfigError("enumerate bands requires --ell and --h")
        params = cl.BandParams(length=args.ell, width=args.h, path_mode=args.path_mode)
        meta.update(ell=args.ell, h=args.h, path_mode=args.path_mode,
                    budget=args.budget, seed=args.seed)
        return (
            cl.enumerate_bands(net, params, budget=args.budget, seed=args.seed,
                               size_cap=args.size_cap),
            meta,
        )
    if fam == "animals":
        if args.kmax is None:
            raise ConfigError("enumerate animals requires --kmax")
        meta["kmax"] = args.kmax
        return cl.enumerate_animals(net, args.kmax, size_cap=args.size_cap), meta
    raise ConfigError(f"unknown family {fam!r}")


def _cmd_enumerate(args) -> int:
    net = network.load_nodeset(args.net)
    stream, meta = _stream_for_family(net, args)
    out_clusters = list(stream)
    with _open_out(args.out) as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        for c in out_clusters:
            fh.write(" ".join(str(i) for i in c.ids) + "\n")
    return 0


def _cmd_netbuild(args) -> int:
    members, meta = cl.load_clusters(args.infile)
    net = metric.build_net(members, args.epsilon, family=meta.get("family", ""))
    meta_out = dict(meta)
    meta_out["epsilon"] = args.epsilon
    with _open_out(args.out) as fh:
        for key, value in meta_out.items():
            fh.write(f"# {key}={value}\n")
        for c in net.members:
            fh.write(" ".join(str(i) for i in c.ids) + "\n")
    return 0


# ---------------------------------------------------------------------------
# calibrate / test


def _statistic_from_args(args, net, members, model):
    if args.statistic == "scan":
        table = detect.ScanTable(members, model)
        return lambda fld: table.max_score(fld.values[0])[0]
    if args.statistic == "average":
        return lambda fld: detect.average_test(fld, model).statistic
    if args.statistic == "cylinder-scan":
        table = detect.ScanTable(members, model)
        return lambda fld: growth.scan_spacetime_cylinders(fld, table, model).statistic
    raise ConfigError(f"unknown statistic {args.statistic!r}")


def _cmd_calibrate(args) -> int:
    net = network.load_nodeset(args.net)
    model = models.noise_model(args.model)
    members = None
    if args.statistic != "average":
        if args.clusters is None:
            raise ConfigError(f"--statistic {args.statistic} requires --clusters")
        members, _ = cl.load_clusters(args.clusters)
    stat = _statistic_from_args(args, net, members, model)
    calib = detect.calibrate(
        stat, net, model, args.alpha, args.b, args.seed, t_m=args.tm,
        threads=args.threads,
    )
    with _open_out(args.out) as fh:
        fh.write("alpha,b,threshold,seed\n")
        fh.write(f"{calib.alpha!r},{calib.b},{calib.threshold!r},{calib.seed}\n")
    return 0


def _read_calibration_threshold(path: str) -> float:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        row = fh.readline().strip().split(",")
    return float(row[header.index("threshold")])


def _cmd_test(args) -> int:
    net = network.load_nodeset(args.net)
    model = models.noise_model(args.model)
    field = models.load_field(net, args.field)
    if args.threshold is not None:
        threshold = args.threshold
    elif args.calibration is not None:
        threshold = _read_calibration_threshold(args.calibration)
    else:
        raise ConfigError("test requires --threshold or --calibration")
    start = time.perf_counter()
    if args.statistic == "average":
        result = detect.average_test(field, model).with_threshold(threshold)
    else:
        if args.clusters is None:
            raise ConfigError(f"--statistic {args.statistic} requires --clusters")
        members, _ = cl.load_clusters(args.clusters)
        if args.statistic == "scan":
            result = detect.scan(field, members, model).with_threshold(threshold)
        else:
            result = growth.scan_spacetime_cylinders(field, members, model)
            result = result.with_threshold(threshold)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    argmax_size = 0 if result.argmax is None else result.argmax.size
    decision = "reject" if result.decision else "accept"
    with _open_out(args.out) as fh:
        fh.write("statistic,threshold,decision,argmax_size,wallclock_ms\n")
        fh.write(
            f"{result.statistic!r},{result.threshold!r},{decision},"
            f"{argmax_size},{elapsed_ms:.3f}\n"
        )
    return 0


# ---------------------------------------------------------------------------
# grow


def _cmd_grow(args) -> int:
    net = network.load_nodeset(args.net)
    meta = {"kind": args.kind, "tm": args.tm}
    if args.kind == "cylinder":
        spec = growth.GrowthSpec(kind="cylinder", center=_parse_floats(args.center),
                                 radius=args.r0, onset=args.t0)
        meta.update(center=args.center, r0=args.r0, t0=args.t0)
    elif args.kind == "cone":
        spec = growth.GrowthSpec(kind="cone", center=_parse_floats(args.center),
                                 speed=args.speed, onset=args.t0)
        meta.update(center=args.center, speed=args.speed, t0=args.t0)
    elif args.kind == "holder":
        controls = tuple(
            _parse_floats(part) for part in args.controls.split(";") if part.strip()
        )
        end = args.tm if args.end is None else args.end
        spec = growth.GrowthSpec(kind="holder-trajectory", controls=controls,
                                 alpha=args.alpha, kappa=args.kappa, radius=args.r,
                                 xi=args.xi, onset=args.start, end=end)
        meta.update(alpha=args.alpha, kappa=args.kappa, r=args.r, xi=args.xi)
    elif args.kind == "richardson":
        within = None
        if args.within_radius is not None:
            ids = network.closed_ball_ids(net, net.coords[args.x0], args.within_radius)
            within = cl.cluster_from_ids(int(i) for i in ids)
        spec = growth.GrowthSpec(kind="richardson", node=args.x0, p=args.p,
                                 onset=args.t0, seed=args.seed, within=within)
        meta.update(x0=args.x0, p=args.p, t0=args.t0, seed=args.seed)
    else:
        raise ConfigError(f"unknown grow kind {args.kind!r}")
    seq = spec.build(net, args.tm)
    with _open_out(args.out) as fh:
        growth.write_sequence(seq, fh, meta)
    return 0


# ---------------------------------------------------------------------------
# sweep config

_CONFIG_DEFAULTS = {
    "net.mode": "lattice",
    "net.d": "2",
    "net.side": "",
    "net.m": "",
    "net.seed": "0",
    "net.rescale": "false",
    "model": "gaussian",
    "tm": "0",
    "test": "eps-scan",
    "scan.family": "balls",
    "scan.lambda": "",
    "scan.epsilon": "0.5",
    "scan.kappa": "1.0",
    "scan.lambda_lo": "",
    "scan.lambda_hi": "",
    "scan.grid_eps": "0.5",
    "scan.r": "",
    "scan.alpha": "1.0",
    "scan.n_control": "3",
    "scan.ell": "",
    "scan.h": "",
    "scan.path_mode": "nondecreasing",
    "scan.budget": "2000",
    "scan.kmax": "",
    "scan.size_cap": "",
    "multiscale.scales": "",
    "truth.family": "",
    "truth.lambda": "",
    "truth.count": "5",
    "truth.margin": "",
    "truth.k": "",
    "truth.p": "0.7",
    "truth.limit_radius": "",
    "truth.warmup": "0",
    "truth.onset": "0",
    "lambda.grid": "",
    "trials": "200",
    "alpha": "0.05",
    "calibration.b": "199",
    "n_null": "400",
    "seed": "0",
    "threads": "1",
    "theory.formula": "",
    "theory.m": "",
    "theory.k": "",
    "theory.d": "",
    "theory.lam": "",
    "theory.ell": "",
    "theory.h": "",
}


def parse_config(text: str) -> dict[str, str]:
    """Flat `key = value` lines; # comments; unknown keys rejected by name."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"duplicate config key {key!r}")
        out[key] = value
    return out


def _cfg_get(cfg: dict, key: str) -> str:
    return cfg.get(key, _CONFIG_DEFAULTS[key])


def _cfg_float(cfg, key) -> float:
    value = _cfg_get(cfg, key)
    if value == "":
        raise ConfigError(f"missing required config key {key!r}")
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: not a number: {value!r}") from exc


def _cfg_int(cfg, key) -> int:
    return int(round(_cfg_float(cfg, key)))


def _cfg_bool(cfg, key) -> bool:
    value = _cfg_get(cfg, key).lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise ConfigError(f"config key {key!r}: expected true/false, got {value!r}")


def _build_net_from_config(cfg) -> network.NodeSet:
    mode = _cfg_get(cfg, "net.mode")
    d = _cfg_int(cfg, "net.d")
    if mode == "lattice":
        net = network.make_lattice(d, _cfg_int(cfg, "net.side"))
        if _cfg_bool(cfg, "net.rescale"):
            net = network.rescale_lattice(net)
        return net
    if mode == "cloud":
        return network.make_uniform_cloud(d, _cfg_int(cfg, "net.m"), _cfg_int(cfg, "net.seed"))
    raise ConfigError(f"config key 'net.mode': unknown mode {mode!r}")


def _scan_members_from_config(cfg, net, seed):
    family = _cfg_get(cfg, "scan.family")
    if family == "balls":
        return cl.enumerate_balls(net, _cfg_float(cfg, "scan.lambda"))
    if family == "thick":
        params = cl.ThickParams(
            lam_lo=_cfg_float(cfg, "scan.lambda_lo"),
            lam_hi=_cfg_float(cfg, "scan.lambda_hi"),
            kappa=_cfg_float(cfg, "scan.kappa"),
            grid_eps=_cfg_float(cfg, "scan.grid_eps"),
        )
        return cl.enumerate_thick(net, params)
    if family == "tubes":
        params = cl.ThinParams(
            r=_cfg_float(cfg, "scan.r"),
            alpha=_cfg_float(cfg, "scan.alpha"),
            kappa=_cfg_float(cfg, "scan.kappa"),
            n_control=_cfg_int(cfg, "scan.n_control"),
        )
        return cl.enumerate_tubes(net, params)
    if family == "bands":
        params = cl.BandParams(
            length=_cfg_int(cfg, "scan.ell"),
            width=_cfg_int(cfg, "scan.h"),
            path_mode=_cfg_get(cfg, "scan.path_mode"),
        )
        return cl.enumerate_bands(
            net, params, budget=_cfg_int(cfg, "scan.budget"),
            seed=derive_seed(seed, "scanpaths"),
        )
    if family == "animals":
        return cl.enumerate_animals(net, _cfg_int(cfg, "scan.kmax"))
    raise ConfigError(f"config key 'scan.family': unknown family {family!r}")


def _truth_sampler_from_config(cfg, net, t_m):
    family = _cfg_get(cfg, "truth.family") or _cfg_get(cfg, "scan.family")
    if family == "balls":
        lam = _cfg_float(cfg, "truth.lambda" if _cfg_get(cfg, "truth.lambda") else "scan.lambda")
        margin = float(_cfg_get(cfg, "truth.margin") or lam)
        extent = 1.0 if net.mode == network.EUCLIDEAN else float(net.side - 1)

        def sample(seed: int):
            rng = rng_from_seed(seed)
            while True:
                node = int(rng.integers(0, net.m))
                coords = net.coords[node]
                if (coords >= margin).all() and (coords <= extent - margin).all():
                    return network.ball_nodes(net, coords, lam)

        return sample
    if family == "thick":
        params = cl.ThickParams(
            lam_lo=_cfg_float(cfg, "scan.lambda_lo"),
            lam_hi=_cfg_float(cfg, "scan.lambda_hi"),
            kappa=_cfg_float(cfg, "scan.kappa"),
            grid_eps=_cfg_float(cfg, "scan.grid_eps"),
        )

        def sample(seed: int):
            spec = cl.sample_thick_shape(
                net, params, seed, rotate=net.mode == network.EUCLIDEAN
            )
            ids = spec.member_ids(net)
            if not ids:
                return sample(derive_seed(seed, "retry"))
            return cl.Cluster(ids)

        return sample
    if family == "bands":
        params = cl.BandParams(
            length=_cfg_int(cfg, "scan.ell"),
            width=_cfg_int(cfg, "scan.h"),
            path_mode=_cfg_get(cfg, "scan.path_mode"),
        )
        return lambda seed: cl.sample_band(net, params, seed)
    if family == "animals":
        k = _cfg_int(cfg, "truth.k" if _cfg_get(cfg, "truth.k") else "scan.kmax")
        return lambda seed: cl.sample_animal(net, k, seed)
    if family == "richardson":
        radius = _cfg_int(cfg, "truth.limit_radius")
        p = _cfg_float(cfg, "truth.p")
        warmup = _cfg_int(cfg, "truth.warmup")
        onset = _cfg_int(cfg, "truth.onset")

        def sample(seed: int):
            rng = rng_from_seed(seed)
            side = net.side
            while True:
                node = int(rng.integers(0, net.m))
                coords = net.coords[node]
                if (coords >= radius + 1).all() and (coords <= side - 2 - radius).all():
                    break
            limit = cl.cluster_from_ids(
                int(i) for i in network.closed_ball_ids(net, coords, radius)
            )
            horizon = warmup + t_m
            seq = growth.richardson_grow(
                net, node, p, onset, horizon, derive_seed(seed, "grow"), within=limit
            )
            return seq.window(warmup, horizon)

        return sample
    raise ConfigError(f"config key 'truth.family': unknown family {family!r}")


def _theory_from_config(cfg) -> float | None:
    formula = _cfg_get(cfg, "theory.formula")
    if not formula:
        return None
    params = {}
    for key in ("m", "k", "d", "lam", "ell", "h"):
        value = _cfg_get(cfg, f"theory.{key}")
        if value:
            params[key] = int(value) if key == "d" else float(value)
    return detect.rate(formula, **params)


def build_experiment(cfg: dict, threads: int | None = None) -> tuple[sim.ExperimentConfig, dict]:
    """Resolve a parsed config into an ExperimentConfig plus the echo map."""
    net = _build_net_from_config(cfg)
    model = models.noise_model(_cfg_get(cfg, "model"))
    seed = _cfg_int(cfg, "seed")
    t_m = _cfg_int(cfg, "tm")
    epsilon = _cfg_float(cfg, "scan.epsilon")
    test_name = _cfg_get(cfg, "test")

    if test_name == "multiscale":
        scales_text = _cfg_get(cfg, "multiscale.scales")
        if not scales_text:
            raise ConfigError("test=multiscale requires multiscale.scales")
        scales = [int(s) for s in scales_text.split(",") if s.strip()]
        extent = 1.0 if net.mode == network.EUCLIDEAN else float(net.side)
        nets = {
            s: metric.build_net(
                cl.enumerate_balls(net, extent * 2.0 ** (-s)), epsilon, family="balls"
            )
            for s in scales
        }
        test: sim.TestSpec = sim.MultiscaleScanTest(nets=nets)
    elif test_name == "eps-scan":
        members = _scan_members_from_config(cfg, net, seed)
        test = sim.EpsScanTest(metric.build_net(members, epsilon))
    elif test_name == "average":
        test = sim.AverageTest()
    elif test_name == "oracle":
        test = sim.OracleTest()
    elif test_name == "cylinders":
        members = _scan_members_from_config(cfg, net, seed)
        test = sim.CylinderScanTest(metric.build_net(members, epsilon))
    else:
        raise ConfigError(f"config key 'test': unknown test {test_name!r}")

    sampler = _truth_sampler_from_config(cfg, net, t_m)
    truth = sim.SampledTruths(sampler=sampler, count=_cfg_int(cfg, "truth.count"))
    grid_text = _cfg_get(cfg, "lambda.grid")
    if not grid_text:
        raise ConfigError("missing required config key 'lambda.grid'")
    lambdas = _parse_floats(grid_text)

    exp = sim.ExperimentConfig(
        net=net,
        model=model,
        test=test,
        truth=truth,
        lambdas=lambdas,
        trials=_cfg_int(cfg, "trials"),
        alpha=_cfg_float(cfg, "alpha"),
        calib_b=_cfg_int(cfg, "calibration.b"),
        seed=seed,
        t_m=t_m,
        n_null=_cfg_int(cfg, "n_null"),
        threads=threads if threads is not None else _cfg_int(cfg, "threads"),
        theory=_theory_from_config(cfg),
    )
    echo = dict(_CONFIG_DEFAULTS)
    echo.update(cfg)
    # thread count never changes results, so it is not part of the echoed
    # experiment identity (outputs stay byte-identical across --threads)
    echo.pop("threads", None)
    return exp, echo


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    exp, echo = build_experiment(cfg, threads=args.threads)
    rows = sim.sweep(exp)
    with _open_out(args.out) as fh:
        sim.write_sweep_csv(rows, fh, echo=echo)
    return 0


# ---------------------------------------------------------------------------
# rates


def _cmd_rates(args) -> int:
    params = {}
    for key in ("m", "k", "eps", "log_n", "lam", "r", "x", "ell", "h"):
        value = getattr(args, key.replace("log_n", "logn"), None)
        if value is not None:
            params["log_n" if key == "log_n" else key] = value
    if args.d is not None:
        params["d"] = args.d
    if args.p is not None:
        params["p"] = args.p
    value = detect.rate(args.formula, **params)
    print(f"{value:.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scanlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("net", help="construct and save a node set")
    p.add_argument("--mode", choices=["lattice", "cloud"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--side", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rescale", action="store_true",
                   help="map the lattice to cell centers in [0,1]^d (euclidean mode)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_net)

    p = sub.add_parser("enumerate", help="enumerate a cluster family")
    p.add_argument("--net", required=True)
    p.add_argument("--family", required=True,
                   choices=["balls", "thick", "tubes", "bands", "animals"])
    p.add_argument("--lam", type=float)
    p.add_argument("--lam-lo", dest="lam_lo", type=float)
    p.add_argument("--lam-hi", dest="lam_hi", type=float)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--grid-eps", dest="grid_eps", type=float, default=0.5)
    p.add_argument("--r", type=float)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--ncontrol", type=int, default=3)
    p.add_argument("--value-pitch", dest="value_pitch", type=float)
    p.add_argument("--ell", type=int)
    p.add_argument("--h", type=int)
    p.add_argument("--path-mode", dest="path_mode", default="nondecreasing",
                   choices=["nondecreasing", "self-avoiding"])
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--kmax", type=int)
    p.add_argument("--size-cap", dest="size_cap", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("netbuild", help="greedy epsilon-net from a cluster file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_netbuild)

    p = sub.add_parser("calibrate", help="empirical null quantile of a statistic")
    p.add_argument("--net", required=True)
    p.add_argument("--clusters")
    p.add_argument("--model", default="gaussian",
                   choices=["gaussian", "bernoulli", "poisson"])
    p.add_argument("--statistic", default="scan",
                   choices=["scan", "average", "cylinder-scan"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--tm", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("test", help="run a thresholded test on a saved field")
    p.add_argument("--net", required=True)
    p.add_argument("--clusters")
    p.add_argument("--field", required=True)
    p.add_argument("--model", default="gaussian",
                   choices=["gaussian", "bernoulli", "poisson"])
    p.add_argument("--statistic", default="scan",
                   choices=["scan", "average", "cylinder-scan"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--calibration")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("grow", help="generate a cluster sequence")
    p.add_argument("--net", required=True)
    p.add_argument("--kind", required=True,
                   choices=["cylinder", "cone", "holder", "richardson"])
    p.add_argument("--center", help="comma-separated coordinates")
    p.add_argument("--r0", type=float)
    p.add_argument("--speed", type=float)
    p.add_argument("--controls", help="semicolon-separated coordinate tuples")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--r", type=float)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--end", type=int)
    p.add_argument("--x0", type=int)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--within-radius", dest="within_radius", type=float)
    p.add_argument("--t0", type=int, default=0)
    p.add_argument("--tm", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_grow)

    p = sub.add_parser("sweep", help="Monte Carlo risk sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("rates", help="closed-form detection thresholds")
    p.add_argument("--formula", required=True)
    p.add_argument("--m", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--logn", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--ell", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--x", type=float)
    p.set_defaults(func=_cmd_rates)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"scanlab: config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"scanlab: capacity error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"scanlab: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
