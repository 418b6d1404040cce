"""Command-line experiment runners.

Four subcommands: `gauss` (benchmark against the Gaussian closed form),
`toy` (2-D/3-D mixture transports with SVG scatters), `align` (embedding
alignment with top-k retrieval), and `discrete` (the discrete baseline).
Every run is a pure function of its JSON config plus the seed: reruns
produce byte-identical CSVs.

Exit codes: 0 success, 2 config/validation error, 3 runtime/solver error.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys

import numpy as np

from . import data, discrete, gaussian, metrics, solver, svg
from .errors import ContractViolation, NGWError
from .linalg import random_rotation
from .seeding import derive_seed

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


# ---- config handling -----------------------------------------------------------

TRAIN_DEFAULTS = {
    "outer_iters": 3000,
    "k_P": 1,
    "k_f": 1,
    "k_T": 10,
    "batch_size": 128,
    "lr_P": 1e-3,
    "lr_f": 1e-4,
    "lr_T": 1e-4,
    "hidden_width": 64,
    "hidden_layers": 2,
    "p_init": "identity",
}

GAUSS_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "dims": [[16, 4]],
    "n_seeds": 1,
    "eval_samples": 16384,
    "train": dict(TRAIN_DEFAULTS),
    "baselines": {
        "discrete": False,
        "discrete_lr": False,
        "points": 2000,
        "fresh_points": 2048,
    },
}

TOY_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "case": "circle-10-5",
    "n_seeds": 1,
    "samples": 1500,
    "sigma": None,  # None: per-case default
    "discrete_subsample": 300,
    "energy_points": 512,
    "energy_permutations": 200,
    "train": dict(TRAIN_DEFAULTS),
}

ALIGN_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "source": None,
    "target": None,
    "format": "glove-text",
    "limit": None,
    "normalize": True,
    "lexicon": None,  # None: match identical words (or identity for synthetic)
    "synthetic": None,  # {"count", "src_dim", "tgt_dim", "snr_db"}
    "split_fraction": 0.8,
    "topk": [1, 5, 10],
    "train": dict(TRAIN_DEFAULTS),
}

DISCRETE_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "source": {"kind": "gaussian", "dim": 16},
    "target": {"kind": "gaussian", "dim": 4},
    "points": 2000,
    "fresh_points": 2048,
    "compute_lr": True,
    "solver": {"max_iter": 200, "tol": 1e-10, "inner": "auto"},
}

SYNTHETIC_DEFAULTS = {"count": 5000, "src_dim": 16, "tgt_dim": 8, "snr_db": 20.0}


def _merge_strict(defaults: dict, override: dict, path: str = "") -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ContractViolation(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict) and isinstance(value, dict):
            merged[key] = _merge_strict(defaults[key], value, where)
        else:
            merged[key] = value
    return merged


def _parse_set_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_overrides(cfg: dict, pairs) -> dict:
    for pair in pairs or ():
        if "=" not in pair:
            raise ContractViolation(f"--set expects key=value, got {pair!r}")
        dotted, raw = pair.split("=", 1)
        node = cfg
        keys = dotted.split(".")
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                raise ContractViolation(f"unknown config key {dotted!r}")
            node = node[key]
        if keys[-1] not in node:
            raise ContractViolation(f"unknown config key {dotted!r}")
        node[keys[-1]] = _parse_set_value(raw)
    return cfg


def load_config(defaults: dict, config_path, overrides, seed) -> dict:
    file_cfg = {}
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ContractViolation("config root must be a JSON object")
    cfg = _merge_strict(defaults, file_cfg)
    _apply_overrides(cfg, overrides)
    if seed is not None:
        cfg["seed"] = int(seed)
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ContractViolation(
            f"unsupported schema_version {cfg.get('schema_version')!r}")
    return cfg


def train_config(block: dict, seed: int) -> solver.TrainConfig:
    return solver.TrainConfig(seed=seed, **block).validate()


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")


def _fmt(x) -> str:
    return repr(float(x))


# ---- gauss ----------------------------------------------------------------------


def _gauss_pair(m: int, n: int, seed_index: int, root_seed: int):
    mu = gaussian.sample_gaussian_spec(m, derive_seed(root_seed, "mu", m, n, seed_index))
    nu = gaussian.sample_gaussian_spec(n, derive_seed(root_seed, "nu", m, n, seed_index))
    return mu, nu


def run_gauss(cfg: dict, outdir: str) -> None:
    dims = cfg["dims"]
    if not dims:
        raise ContractViolation("dims must list at least one (m, n) pair")
    pairs = []
    for entry in dims:
        if len(entry) != 2:
            raise ContractViolation(f"each dims entry must be [m, n], got {entry!r}")
        m, n = int(entry[0]), int(entry[1])
        if m < n:
            raise ContractViolation(f"dims entries need m >= n, got {entry!r}")
        pairs.append((m, n))
    n_seeds = int(cfg["n_seeds"])
    if n_seeds < 1:
        raise ContractViolation("n_seeds must be >= 1")
    root = int(cfg["seed"])
    eval_samples = int(cfg["eval_samples"])
    base = cfg["baselines"]

    rows = []
    for m, n in pairs:
        for s in range(n_seeds):
            run_id = f"gauss-m{m}-n{n}-s{s}"
            mu_spec, nu_spec = _gauss_pair(m, n, s, root)
            gt = gaussian.innergw_closed_form(mu_spec, nu_spec)
            X_eval = gaussian.sample_points(mu_spec, eval_samples,
                                            derive_seed(root, "eval_x", m, n, s))
            Y_eval = gaussian.sample_points(nu_spec, eval_samples,
                                            derive_seed(root, "eval_y", m, n, s))
            rows.append((run_id, m, n, s, "gt", "innergw", _fmt(gt), 0))

            tc = train_config(cfg["train"], derive_seed(root, "train", m, n, s))
            try:
                result = solver.train(
                    tc,
                    solver.GaussianSampler(mu_spec, derive_seed(root, "mu_s", m, n, s)),
                    solver.GaussianSampler(nu_spec, derive_seed(root, "nu_s", m, n, s)),
                )
            except NGWError as exc:
                rows.append((run_id, m, n, s, "ngw", "error", f'"{exc}"', 0))
                continue
            result.history.to_csv(os.path.join(outdir, f"history-{run_id}.csv"))
            solver.save_checkpoint(os.path.join(outdir, f"checkpoint-{run_id}.json"),
                                   result)
            e = metrics.empirical_innergw(result.transport, X_eval)
            u = metrics.bw_uvp(result.transport, X_eval, Y_eval)
            rows.append((run_id, m, n, s, "ngw", "innergw", _fmt(e), eval_samples))
            rows.append((run_id, m, n, s, "ngw", "bw_uvp", _fmt(u), eval_samples))

            if base["discrete"] or base["discrete_lr"]:
                pts = int(base["points"])
                Xd = gaussian.sample_points(mu_spec, pts,
                                            derive_seed(root, "disc_x", m, n, s))
                Yd = gaussian.sample_points(nu_spec, pts,
                                            derive_seed(root, "disc_y", m, n, s))
                profile = discrete.CostProfile.inner_product(Xd, Yd)
                w = np.full(pts, 1.0 / pts)
                plan = discrete.gw_discrete(profile, w, w)
                if base["discrete"]:
                    rows.append((run_id, m, n, s, "discrete", "gw_cost",
                                 _fmt(discrete.gw_cost(plan, profile)), pts))
                if base["discrete_lr"]:
                    A, b = discrete.barycentric_lr(plan, Xd, Yd)
                    fresh = int(base["fresh_points"])
                    Xf = gaussian.sample_points(mu_spec, fresh,
                                                derive_seed(root, "fresh_x", m, n, s))
                    Yf = gaussian.sample_points(nu_spec, fresh,
                                                derive_seed(root, "fresh_y", m, n, s))
                    lr_map = lambda pts_in: pts_in @ A.T + b  # noqa: E731
                    rows.append((run_id, m, n, s, "discrete_lr", "innergw",
                                 _fmt(metrics.empirical_innergw(lr_map, Xf)), fresh))
                    rows.append((run_id, m, n, s, "discrete_lr", "bw_uvp",
                                 _fmt(metrics.bw_uvp(lr_map, Xf, Yf)), fresh))

    _write_csv(os.path.join(outdir, "results.csv"),
               "schema_version,run_id,m,n,seed,method,metric,value,samples",
               [(SCHEMA_VERSION,) + r for r in rows])

    # aggregate mirrors the benchmark-table layout: one row per dim pair
    agg_rows = []
    for m, n in pairs:
        by = {}
        for r in rows:
            if r[1] == m and r[2] == n and r[5] != "error":
                by.setdefault((r[4], r[5]), []).append(float(r[6]))
        def mean_of(method, metric):
            vals = by.get((method, metric))
            return _fmt(np.mean(vals)) if vals else ""
        agg_rows.append((SCHEMA_VERSION, m, n,
                         mean_of("gt", "innergw"),
                         mean_of("discrete", "gw_cost"),
                         mean_of("discrete_lr", "innergw"),
                         mean_of("ngw", "innergw"),
                         mean_of("discrete_lr", "bw_uvp"),
                         mean_of("ngw", "bw_uvp")))
    _write_csv(os.path.join(outdir, "aggregate.csv"),
               "schema_version,m,n,gt_innergw,discrete_gw_cost,"
               "discrete_lr_innergw,ngw_innergw,discrete_lr_bw_uvp,ngw_bw_uvp",
               agg_rows)


# ---- toy ------------------------------------------------------------------------

TOY_CASES = ("circle-10-5", "cube-to-circle")


def _toy_specs(case: str, sigma):
    if case == "circle-10-5":
        s = data.CIRCLE_SIGMA_DEFAULT if sigma is None else float(sigma)
        return data.circle_mixture_spec(10, s), data.circle_mixture_spec(5, s)
    if case == "cube-to-circle":
        s_src = data.CUBE_SIGMA_DEFAULT if sigma is None else float(sigma)
        s_tgt = data.CIRCLE_SIGMA_DEFAULT if sigma is None else float(sigma)
        return data.cube_mixture_spec(s_src), data.circle_mixture_spec(8, s_tgt)
    raise ContractViolation(f"unknown toy case {case!r}; expected one of {TOY_CASES}")


def _points_csv(path, points, labels=None):
    dim = points.shape[1]
    header = ",".join(f"x{i}" for i in range(dim))
    if labels is not None:
        header += ",component"
        rows = [tuple(_fmt(v) for v in p) + (int(l),)
                for p, l in zip(points, labels)]
    else:
        rows = [tuple(_fmt(v) for v in p) for p in points]
    _write_csv(path, header, rows)


def run_toy(cfg: dict, outdir: str) -> None:
    case = cfg["case"]
    mu_spec, nu_spec = _toy_specs(case, cfg["sigma"])
    root = int(cfg["seed"])
    n_seeds = int(cfg["n_seeds"])
    samples = int(cfg["samples"])
    summary = []

    for s in range(n_seeds):
        run_seed = derive_seed(root, case, s)
        run_dir = os.path.join(outdir, f"seed-{s}")
        os.makedirs(run_dir, exist_ok=True)

        src_pts, src_labels = mu_spec.sample_labeled(samples, derive_seed(run_seed, "src"))
        tgt_pts, tgt_labels = nu_spec.sample_labeled(samples, derive_seed(run_seed, "tgt"))

        tc = train_config(cfg["train"], run_seed)
        result = solver.train(
            tc,
            data.MixtureSampler(mu_spec, derive_seed(run_seed, "mu_stream")),
            data.MixtureSampler(nu_spec, derive_seed(run_seed, "nu_stream")),
        )

        mapped = result.transport(src_pts)
        _points_csv(os.path.join(run_dir, "source.csv"), src_pts, src_labels)
        _points_csv(os.path.join(run_dir, "target.csv"), tgt_pts, tgt_labels)
        _points_csv(os.path.join(run_dir, "mapped.csv"), mapped, src_labels)
        result.history.to_csv(os.path.join(run_dir, "history.csv"))
        solver.save_checkpoint(os.path.join(run_dir, "checkpoint.json"), result)

        # discrete comparison panel on a subsample
        sub = int(cfg["discrete_subsample"])
        Xd, Yd = src_pts[:sub], tgt_pts[:sub]
        sub_labels = src_labels[:sub]
        profile = discrete.CostProfile.inner_product(Xd, Yd)
        w = np.full(sub, 1.0 / sub)
        plan = discrete.gw_discrete(profile, w, w)
        bary = (plan.coupling @ Yd) / plan.coupling.sum(axis=1, keepdims=True)
        _points_csv(os.path.join(run_dir, "discrete_mapped.csv"), bary, sub_labels)

        panels = [
            svg.Panel("source"),
            svg.Panel("target").add(svg.project_2d(tgt_pts), "#9498a0"),
            svg.Panel("mapped"),
            svg.Panel("discrete"),
        ]
        for comp in range(mu_spec.n_components):
            color = svg.color_for(comp)
            panels[0].add(svg.project_2d(src_pts[src_labels == comp]), color)
            panels[2].add(svg.project_2d(mapped[src_labels == comp]), color)
            panels[3].add(svg.project_2d(bary[sub_labels == comp]), color)
        svg.scatter_svg(os.path.join(run_dir, "toy.svg"), panels)

        pvalue = metrics.energy_test_pvalue(
            mapped[: int(cfg["energy_points"])],
            nu_spec.sample(int(cfg["energy_points"]), derive_seed(run_seed, "energy")),
            n_permutations=int(cfg["energy_permutations"]),
            seed=derive_seed(run_seed, "perm"),
        )
        summary.append((SCHEMA_VERSION, case, s, _fmt(pvalue),
                        _fmt(discrete.gw_cost(plan, profile))))

    _write_csv(os.path.join(outdir, "results.csv"),
               "schema_version,case,seed,energy_pvalue,discrete_gw_cost",
               summary)


# ---- align ----------------------------------------------------------------------


def _synthetic_embeddings(spec: dict, seed: int):
    count = int(spec["count"])
    src_dim = int(spec["src_dim"])
    tgt_dim = int(spec["tgt_dim"])
    snr_db = float(spec["snr_db"])
    if tgt_dim > src_dim:
        raise ContractViolation("synthetic tgt_dim must not exceed src_dim")
    rng = np.random.default_rng(derive_seed(seed, "synth"))
    # word-embedding-like statistics: a shared mean direction plus a
    # power-law spectrum. A centered isotropic cloud would make the
    # alignment unidentifiable (every target rotation is equally good),
    # which no unsupervised method can recover from.
    scales = np.arange(1, src_dim + 1, dtype=np.float64) ** -0.6
    basis = random_rotation(src_dim, derive_seed(seed, "synth_basis"))
    mean = basis[0] * 1.0
    X = mean + (rng.standard_normal((count, src_dim)) * scales) @ basis
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    Q = random_rotation(src_dim, derive_seed(seed, "synth_proj"))[:tgt_dim, :]
    Y = X @ Q.T
    signal_power = float(np.mean(Y * Y))
    noise_scale = np.sqrt(signal_power / (10.0 ** (snr_db / 10.0)))
    Y = Y + noise_scale * rng.standard_normal(Y.shape)
    words = [f"w{i}" for i in range(count)]
    src = data.EmbeddingSet(words, X, normalized=False)
    tgt = data.EmbeddingSet(list(words), Y, normalized=False)
    return src, tgt


def _normalize_set(emb: data.EmbeddingSet) -> data.EmbeddingSet:
    norms = np.linalg.norm(emb.vectors, axis=1, keepdims=True)
    keep = norms.reshape(-1) > 0.0
    vecs = emb.vectors[keep] / norms[keep]
    words = [w for w, k in zip(emb.words, keep) if k]
    return data.EmbeddingSet(words, vecs, normalized=True,
                             n_duplicates=emb.n_duplicates,
                             n_dropped=emb.n_dropped + int(np.sum(~keep)))


def _word_identity_lexicon(src: data.EmbeddingSet, tgt: data.EmbeddingSet) -> data.Lexicon:
    entries = []
    for i, w in enumerate(src.words):
        j = tgt.index_of(w)
        if j is not None:
            entries.append((i, frozenset((j,))))
    if not entries:
        raise ContractViolation("no shared words between source and target")
    return data.Lexicon(entries)


def run_align(cfg: dict, outdir: str) -> None:
    root = int(cfg["seed"])
    if cfg["synthetic"] is not None:
        synth = _merge_strict(SYNTHETIC_DEFAULTS, cfg["synthetic"])
        src, tgt = _synthetic_embeddings(synth, root)
    else:
        if not cfg["source"] or not cfg["target"]:
            raise ContractViolation("align needs source and target paths "
                                    "(or a synthetic block)")
        for path in (cfg["source"], cfg["target"]):
            if not os.path.exists(path):
                raise ContractViolation(f"embedding file not found: {path}")
        src = data.load_embeddings(cfg["source"], format=cfg["format"],
                                   limit=cfg["limit"], normalize=False)
        tgt = data.load_embeddings(cfg["target"], format=cfg["format"],
                                   limit=cfg["limit"], normalize=False)
    if cfg["normalize"]:
        src = _normalize_set(src)
        tgt = _normalize_set(tgt)

    if cfg["lexicon"] is not None:
        if not os.path.exists(cfg["lexicon"]):
            raise ContractViolation(f"lexicon file not found: {cfg['lexicon']}")
        lex = data.load_lexicon(cfg["lexicon"], src, tgt)
    else:
        lex = _word_identity_lexicon(src, tgt)

    train_idx, test_idx = data.split_indices(len(src), float(cfg["split_fraction"]),
                                             derive_seed(root, "split"))
    tc = train_config(cfg["train"], derive_seed(root, "train"))
    mu = solver.ArraySampler(src.vectors[train_idx], derive_seed(root, "mu"))
    nu = solver.ArraySampler(tgt.vectors, derive_seed(root, "nu"))
    result = solver.train(tc, mu, nu)
    result.history.to_csv(os.path.join(outdir, "history.csv"))
    solver.save_checkpoint(os.path.join(outdir, "checkpoint.json"), result)

    rows = []
    ks = [int(k) for k in cfg["topk"]]
    for split_name, idx in (("train", train_idx), ("test", test_idx)):
        sub_lex = lex.restrict_queries(idx)
        mapped = result.transport(src.vectors[idx])
        for k in ks:
            acc = metrics.topk_accuracy(mapped, tgt.vectors, sub_lex, k)
            rows.append((SCHEMA_VERSION, split_name, k, _fmt(acc), len(sub_lex)))
    _write_csv(os.path.join(outdir, "accuracy.csv"),
               "schema_version,split,k,accuracy,n_queries", rows)


# ---- discrete --------------------------------------------------------------------


def _sample_cloud(spec: dict, count: int, seed: int) -> np.ndarray:
    kind = spec.get("kind")
    if kind == "gaussian":
        g = gaussian.sample_gaussian_spec(int(spec["dim"]), derive_seed(seed, "spec"))
        return gaussian.sample_points(g, count, derive_seed(seed, "pts"))
    if kind == "circle":
        mix = data.circle_mixture_spec(int(spec.get("components", 5)),
                                       float(spec.get("sigma", data.CIRCLE_SIGMA_DEFAULT)))
        return mix.sample(count, derive_seed(seed, "pts"))
    if kind == "cube":
        mix = data.cube_mixture_spec(float(spec.get("sigma", data.CUBE_SIGMA_DEFAULT)))
        return mix.sample(count, derive_seed(seed, "pts"))
    raise ContractViolation(f"unknown sampler kind {kind!r}")


def run_discrete(cfg: dict, outdir: str) -> None:
    root = int(cfg["seed"])
    pts = int(cfg["points"])
    X = _sample_cloud(cfg["source"], pts, derive_seed(root, "src"))
    Y = _sample_cloud(cfg["target"], pts, derive_seed(root, "tgt"))
    profile = discrete.CostProfile.inner_product(X, Y)
    w = np.full(pts, 1.0 / pts)
    sc = cfg["solver"]
    plan = discrete.gw_discrete(profile, w, w, discrete.GWSolveConfig(
        max_iter=int(sc["max_iter"]), tol=float(sc["tol"]), inner=sc["inner"]))
    discrete.plan_to_csv(plan, os.path.join(outdir, "plan.csv"))

    rows = [(SCHEMA_VERSION, "discrete", "gw_cost",
             _fmt(discrete.gw_cost(plan, profile)), pts)]
    if cfg["compute_lr"]:
        A, b = discrete.barycentric_lr(plan, X, Y)
        fresh = int(cfg["fresh_points"])
        Xf = _sample_cloud(cfg["source"], fresh, derive_seed(root, "src_fresh"))
        Yf = _sample_cloud(cfg["target"], fresh, derive_seed(root, "tgt_fresh"))
        lr_map = lambda pts_in: pts_in @ A.T + b  # noqa: E731
        rows.append((SCHEMA_VERSION, "discrete_lr", "innergw",
                     _fmt(metrics.empirical_innergw(lr_map, Xf)), fresh))
        rows.append((SCHEMA_VERSION, "discrete_lr", "bw_uvp",
                     _fmt(metrics.bw_uvp(lr_map, Xf, Yf)), fresh))
    _write_csv(os.path.join(outdir, "results.csv"),
               "schema_version,method,metric,value,samples", rows)


# ---- entry point ----------------------------------------------------------------

_COMMANDS = {
    "gauss": (GAUSS_DEFAULTS, run_gauss),
    "toy": (TOY_DEFAULTS, run_toy),
    "align": (ALIGN_DEFAULTS, run_align),
    "discrete": (DISCRETE_DEFAULTS, run_discrete),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ngw",
        description="Inner-product GW transport experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    defaults, runner = _COMMANDS[args.command]
    try:
        cfg = load_config(defaults, args.config, args.set, args.seed)
    except (ContractViolation, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
            json.dump(cfg, fh, indent=1, sort_keys=True)
            fh.write("\n")
        runner(cfg, args.out)
    except ContractViolation as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NGWError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
