"""Command-line entry point wiring the library into file-based workflows.

Exit status: 0 on success, 1 on a domain error (printed verbatim), 2 on a
usage error. Every subcommand is deterministic: identical inputs and seed
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import a2b, audit, evaluation, fixtures, ik, sampling, svr
from .errors import AnthrofitError, InvalidConfig
from .measure import AnthroVector, Measurer, b2a
from .model import BodyModel, ShapeParams, load_model


def _parse_beta(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise InvalidConfig(f"cannot parse beta vector {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _align_keys_from_model(body: BodyModel, path: str) -> dict | None:
    from . import bmf

    header, _ = bmf.read_container(path, bmf.MODEL_MAGIC)
    meta = header.get("keypoint_meta", {}).get("joints")
    if meta and all(k in meta for k in ("pelvis", "neck", "l_hip", "r_hip")):
        return {k: int(v) for k, v in meta.items()}
    return None


def _ik_config(args, body: BodyModel, body_path: str, mode: str = ik.REFIT) -> ik.IKConfig:
    return ik.IKConfig(
        lambda_joint=args.lambda_joint,
        lambda_prior=args.lambda_prior,
        lambda_beta=args.lambda_beta,
        max_iters=args.max_iters,
        step_size=args.step_size,
        prior=args.prior,
        regressor=args.regressor,
        mode=mode,
        align_keys=_align_keys_from_model(body, body_path) if args.align == "auto" else None,
    )


def _add_ik_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda-joint", type=float, default=10.0)
    parser.add_argument("--lambda-prior", type=float, default=0.0007)
    parser.add_argument("--lambda-beta", type=float, default=0.01)
    parser.add_argument("--max-iters", type=int, default=300)
    parser.add_argument("--step-size", type=float, default=0.1)
    parser.add_argument("--prior", choices=[ik.GAUSSIAN_POSE, ik.NO_PRIOR],
                        default=ik.GAUSSIAN_POSE)
    parser.add_argument("--regressor", default="joints")
    parser.add_argument("--align", choices=["auto", "none"], default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anthrofit")
    parser.add_argument("--threads", type=int, default=1,
                        help="cap on internal parallelism (processing is serial today)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-toy-asset", help="write a deterministic test asset")
    p.add_argument("--kind", choices=["cylinder", "arm", "human"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gender", choices=["male", "female", "neutral"], default="neutral")
    p.add_argument("--with-pose-dirs", action="store_true")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("measure", help="measure a shaped mesh (B2A)")
    p.add_argument("--body", required=True)
    p.add_argument("--beta", required=True, help="comma-separated shape coefficients")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")

    p = sub.add_parser("sample", help="fit a shape distribution or draw from one")
    p.add_argument("--betas", help="corpus CSV to fit (writes the distribution JSON)")
    p.add_argument("--dist", help="distribution JSON to sample from")
    p.add_argument("--body", help="with --dist: also measure and write a dataset CSV")
    p.add_argument("--kind", choices=[sampling.NORMAL, sampling.UNIFORM], default=sampling.UNIFORM)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("a2b", help="measurement-to-shape regressors")
    a2b_sub = p.add_subparsers(dest="a2b_command", required=True)

    q = a2b_sub.add_parser("train")
    q.add_argument("--body", required=True)
    q.add_argument("--dist", required=True)
    q.add_argument("--kind", choices=[a2b.NN, a2b.SVR], required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.add_argument("--sample-kind", choices=[sampling.NORMAL, sampling.UNIFORM],
                   default=sampling.UNIFORM)
    q.add_argument("--alpha", type=float, default=1.0)
    q.add_argument("--count", type=int, default=10_000, help="svr: training subjects")
    q.add_argument("--iterations", type=int, default=50_000, help="nn: training iterations")
    q.add_argument("--batch-size", type=int, default=256)
    q.add_argument("--learning-rate", type=float, default=1e-3)
    q.add_argument("--width", type=int, default=330)
    q.add_argument("--depth", type=int, default=4)
    q.add_argument("--warmup", type=int, default=1024)
    q.add_argument("--svr-c", type=float, default=svr.DEFAULT_C)
    q.add_argument("--svr-epsilon", type=float, default=svr.DEFAULT_EPSILON)

    q = a2b_sub.add_parser("eval")
    q.add_argument("--a2b", required=True)
    q.add_argument("--body", required=True)
    q.add_argument("--betas", required=True, help="CSV of test shape rows")
    q.add_argument("--format", choices=["json", "table"], default="json")
    q.add_argument("--out")

    q = a2b_sub.add_parser("predict")
    q.add_argument("--a2b", required=True)
    q.add_argument("--measurements", required=True, help="JSON {name: mm}")
    q.add_argument("--out")

    q = a2b_sub.add_parser("convert-gender")
    q.add_argument("--a2b", required=True, help="target-gender regressor")
    q.add_argument("--body-src", required=True)
    q.add_argument("--body-tgt", required=True)
    q.add_argument("--beta", required=True)
    q.add_argument("--out")

    p = sub.add_parser("ik", help="fit shapes/poses to keypoint sequences")
    p.add_argument("--body", required=True)
    p.add_argument("--frames", required=True, help="JSONL keypoint targets")
    p.add_argument("--out", required=True)
    p.add_argument("--fixed-shape", help="beta JSON: freeze the shape (refit mode)")
    p.add_argument("--swap-only", action="store_true",
                   help="with --fixed-shape and --prior-fit: swap shapes, keep poses")
    p.add_argument("--prior-fit", help="earlier fit JSONL (warm start / swap source)")
    p.add_argument("--seed", type=int, default=0)
    _add_ik_flags(p)

    p = sub.add_parser("pseudo-gt",
                       help="median measurements from a fit of GT keypoints")
    p.add_argument("--body", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_ik_flags(p)

    p = sub.add_parser("audit", help="per-person dispersion statistics")
    p.add_argument("--in", dest="input", required=True, help="CSV or JSONL samples")
    p.add_argument("--kind", choices=["measurements", "betas"], default="measurements")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--out")

    p = sub.add_parser("eval", help="pose metrics and replacement experiments")
    p.add_argument("--pred", required=True, help="frame-estimate JSONL")
    p.add_argument("--gt", required=True, help="GT keypoints JSONL")
    p.add_argument("--body", required=True)
    p.add_argument("--a2b", action="append", default=[], metavar="LABEL=PATH")
    p.add_argument("--measurements", help="pseudo-GT measurement JSON for replacement rows")
    p.add_argument("--experiment", action="store_true",
                   help="emit the full shape-replacement table")
    p.add_argument("--regressor", default="joints")
    p.add_argument("--root-index", type=int, default=0)
    p.add_argument("--selection", choices=sorted(evaluation.KEYPOINT_SELECTIONS),
                   help="restrict metrics to a named keypoint subset")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--out")
    return parser


def _cmd_gen_toy_asset(args) -> None:
    kwargs = {}
    if args.kind == "human":
        kwargs["gender"] = args.gender
    if args.kind == "arm" and args.with_pose_dirs:
        kwargs["with_pose_dirs"] = True
    fixtures.write_toy_asset(args.kind, args.out, **kwargs)


def _cmd_measure(args) -> None:
    body = load_model(args.body)
    av = b2a(body, ShapeParams(_parse_beta(args.beta)))
    if args.format == "csv":
        lines = ",".join(av.names) + "\n" + ",".join(repr(float(v)) for v in av.values) + "\n"
        _emit(lines, args.out)
    else:
        _emit(_json_dump(av.as_dict()), args.out)


def _cmd_sample(args) -> None:
    if args.betas:
        dist = sampling.fit_distribution(sampling.load_beta_csv(args.betas))
        sampling.save_distribution(args.out, dist)
        return
    if not args.dist:
        raise InvalidConfig("sample needs --betas (fit) or --dist (draw)")
    dist = sampling.load_distribution(args.dist)
    cfg = sampling.SampleConfig(kind=args.kind, count=args.count, seed=args.seed,
                                alpha=args.alpha)
    if args.body:
        body = load_model(args.body)
        measurer = Measurer(body)
        a, betas = sampling.generate_dataset_arrays(body, dist, cfg, measurer)
        sampling.save_dataset_csv(args.out, measurer.names, a, betas)
    else:
        sampling.save_beta_csv(args.out, sampling.sample_shapes(dist, cfg))


def _cmd_a2b(args) -> None:
    if args.a2b_command == "train":
        body = load_model(args.body)
        dist = sampling.load_distribution(args.dist)
        if args.kind == a2b.NN:
            cfg = a2b.NNTrainConfig(sample_kind=args.sample_kind, alpha=args.alpha,
                                    seed=args.seed, warmup=args.warmup, width=args.width,
                                    depth=args.depth, learning_rate=args.learning_rate,
                                    batch_size=args.batch_size, iterations=args.iterations)
            model_ = a2b.train_nn(body, dist, cfg)
        else:
            measurer = Measurer(body)
            data = sampling.generate_dataset_arrays(
                body, dist,
                sampling.SampleConfig(kind=args.sample_kind, count=args.count,
                                      seed=args.seed, alpha=args.alpha), measurer)
            model_ = a2b.train_svr(data, a2b.SVRTrainConfig(C=args.svr_c,
                                                            epsilon=args.svr_epsilon),
                                   gender=body.gender, measurement_names=measurer.names)
        a2b.save_model(args.out, model_)
        return

    if args.a2b_command == "eval":
        model_ = a2b.load_model(args.a2b)
        body = load_model(args.body)
        betas = sampling.load_beta_csv(args.betas)
        report = a2b.evaluate(model_, body, betas)
        if args.format == "table":
            lines = [f"{'measurement':<22} {'MAE mm':>10}"]
            lines += [f"{n:<22} {v:>10.4f}"
                      for n, v in report.per_measurement_mae_mm.items()]
            lines.append(f"{'anthro MAE (mm)':<22} {report.anthro_mae_mm:>10.4f}")
            lines.append(f"{'beta MSE (1e-3)':<22} {report.beta_mse:>10.4f}")
            _emit("\n".join(lines) + "\n", args.out)
        else:
            _emit(_json_dump(report.to_json()), args.out)
        return

    if args.a2b_command == "predict":
        model_ = a2b.load_model(args.a2b)
        data = json.loads(Path(args.measurements).read_text())
        av = AnthroVector.from_dict(data, tuple(model_.measurement_names))
        pred = a2b.predict(model_, av)
        _emit(_json_dump({"beta": [float(v) for v in pred.beta],
                          "gender": model_.gender}), args.out)
        return

    model_ = a2b.load_model(args.a2b)
    body_src = load_model(args.body_src)
    body_tgt = load_model(args.body_tgt)
    out = a2b.convert_gender(ShapeParams(_parse_beta(args.beta)), body_src, body_tgt, model_)
    _emit(_json_dump({"beta": [float(v) for v in out.beta],
                      "gender": model_.gender}), args.out)


def _cmd_ik(args) -> None:
    body = load_model(args.body)
    frames = ik.read_frames(args.frames)
    prior = ik.read_results(args.prior_fit) if args.prior_fit else None
    if args.fixed_shape:
        beta = np.asarray(json.loads(Path(args.fixed_shape).read_text())["beta"],
                          dtype=np.float64)
        mode = ik.SWAP if args.swap_only else ik.REFIT
        cfg = _ik_config(args, body, args.body, mode=mode)
        results = ik.refit_with_fixed_shape(body, frames, ShapeParams(beta), cfg=cfg,
                                            prior_results=prior)
    else:
        if args.swap_only:
            raise InvalidConfig("--swap-only needs --fixed-shape")
        cfg = _ik_config(args, body, args.body)
        results = ik.fit_sequence(body, frames, cfg=cfg, warm_starts=prior)
    ik.write_results(args.out, results)


def _cmd_pseudo_gt(args) -> None:
    body = load_model(args.body)
    frames = ik.read_frames(args.frames)
    cfg = _ik_config(args, body, args.body)
    results = ik.fit_sequence(body, frames, cfg=cfg)
    measurer = Measurer(body)
    betas = np.stack([r.shape.beta for r in results if r.shape is not None])
    if betas.shape[0] == 0:
        raise InvalidConfig("no frame produced a usable fit")
    from .measure import b2a_batch

    values = b2a_batch(body, betas, measurer)
    median = np.median(values, axis=0)
    _emit(_json_dump({n: float(v) for n, v in zip(measurer.names, median)}), args.out)


def _cmd_audit(args) -> None:
    path = Path(args.input)
    if path.suffix.lower() == ".csv":
        samples, names = audit.load_samples_csv(path)
    else:
        samples, names = audit.load_samples_jsonl(path)
    report = audit.consistency_stats(samples, names=names, kind=args.kind)
    if args.format == "table":
        _emit(report.format_table() + "\n", args.out)
    else:
        _emit(_json_dump(report.to_json()), args.out)


def _cmd_eval(args) -> None:
    body = load_model(args.body)
    pred = evaluation.read_estimates(args.pred)
    gt = {f.frame_id: f.keypoints for f in ik.read_frames(args.gt)}
    if args.experiment:
        models = []
        for spec in args.a2b:
            label, _, path = spec.partition("=")
            if not path:
                raise InvalidConfig(f"--a2b expects LABEL=PATH, got {spec!r}")
            models.append((label, a2b.load_model(path)))
        pgt = None
        if args.measurements:
            measurer = Measurer(body)
            data = json.loads(Path(args.measurements).read_text())
            pgt = AnthroVector.from_dict(data, measurer.names).values
        rows = evaluation.run_replacement_experiment(
            body, pred, gt, evaluation.ReplacementConfig(
                regressor=args.regressor, root_index=args.root_index,
                a2b_models=models, pseudo_gt_measurements=pgt))
        if args.format == "table":
            _emit(evaluation.format_experiment_table(rows) + "\n", args.out)
        else:
            _emit(evaluation.experiment_report_json(rows), args.out)
        return
    err, no_result = evaluation.mpjpe(pred, gt, model=body, regressor=args.regressor,
                                      root_index=args.root_index, selection=args.selection)
    report = {"mpjpe_mm": err, "no_result_percent": no_result}
    if any(e.present for e in pred):
        report["body_height_sigma_cm"] = evaluation.body_height_sigma_cm(body, pred)
    if args.format == "table":
        lines = [f"{k:<22} {v:>12.4f}" for k, v in sorted(report.items())]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(_json_dump(report), args.out)


_COMMANDS = {
    "gen-toy-asset": _cmd_gen_toy_asset,
    "measure": _cmd_measure,
    "sample": _cmd_sample,
    "a2b": _cmd_a2b,
    "ik": _cmd_ik,
    "pseudo-gt": _cmd_pseudo_gt,
    "audit": _cmd_audit,
    "eval": _cmd_eval,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        _COMMANDS[args.command](args)
    except AnthrofitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
