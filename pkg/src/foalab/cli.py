"""Command-line entry points: scene synthesis, DirAC analysis, loss
evaluation, gradient checking, codebook training, and batch metrics.

Conventions: angles in degrees at this boundary (radians internally),
exit code 0 on success, 1 when a requested check fails, 2 on usage or
input errors.  A JSON config file can provide defaults for any long
option; explicit flags win.  Every subcommand prints the seed it ran
with so outputs can be reproduced.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .dirac import analyze, export_matrix_csv
from .errors import (
    FoalabError,
    MissingSourceError,
    NoDirectionalEnergyError,
    SampleRateMismatchError,
    ValidationError,
)
from .gradcheck import DEFAULT_THRESHOLD, check_spectrum_gradient, random_spectrum_pair
from .metrics import EvalReport, aggregate_reports, evaluate_pair
from .scene import DEFAULT_SAMPLE_RATE, generate_scene, load_manifest, write_json_atomic
from .scloss import ScConfig, sc_loss
from .signal import Direction, unit_vector
from .tf import StftParams, foa_stft
from .vq import (
    MAX_TOKEN_CODES,
    codebook_stats,
    kmeans_init,
    quantize,
    read_codebook,
    read_latents,
    write_codebook,
    write_tokens,
)
from .wavio import read_mono_wav, read_wav, write_wav

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            cfg = json.load(f)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return cfg


def _pick(args, cfg, name, fallback):
    """Flag if given, else config value, else fallback."""
    v = getattr(args, name, None)
    if v is not None:
        return v
    if name in cfg:
        return cfg[name]
    return fallback


def _stft_params(args, cfg) -> StftParams:
    return StftParams(
        fft_size=int(_pick(args, cfg, "fft_size", 1024)),
        hop=int(_pick(args, cfg, "hop", 256)),
        win_length=(
            int(_pick(args, cfg, "win_length", 0)) or None
        ),
    )


def _sc_config(args, cfg) -> ScConfig:
    return ScConfig(
        tau_e=float(_pick(args, cfg, "tau_e", 1e-6)),
        tau_d=float(_pick(args, cfg, "tau_d", 0.95)),
        eps=float(_pick(args, cfg, "eps", 1e-8)),
        l_frames=int(_pick(args, cfg, "avg_frames", 5)),
    )


def _seed(args, cfg) -> int:
    return int(_pick(args, cfg, "seed", 0))


def cmd_spatialize(args) -> int:
    cfg = _load_config(args.config)
    sample_rate = int(_pick(args, cfg, "sample_rate", DEFAULT_SAMPLE_RATE))
    manifest = load_manifest(args.manifest)
    audio = {}
    for s in manifest.sources:
        path = os.path.join(args.audio_dir, s.file)
        if not os.path.exists(path):
            raise MissingSourceError(
                f"source audio {s.file!r} not found in {args.audio_dir}"
            )
        rate, mono = read_mono_wav(path)
        if rate != sample_rate:
            raise SampleRateMismatchError(
                f"{path}: sample rate {rate} does not match scene rate {sample_rate}"
            )
        audio[s.file] = mono
    sig, truth = generate_scene(manifest, audio, sample_rate)
    write_wav(args.out, sig, encoding=_pick(args, cfg, "encoding", "float32"))
    sidecar = os.path.splitext(args.out)[0] + ".truth.json"
    write_json_atomic(
        sidecar,
        {
            "seed": manifest.seed,
            "sample_rate": sample_rate,
            "duration": manifest.duration,
            "sources": [
                {"azimuth_deg": d.azimuth_deg, "elevation_deg": d.elevation_deg}
                for d in truth
            ],
        },
    )
    print(f"seed {manifest.seed}")
    print(f"wrote {args.out}")
    print(f"wrote {sidecar}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load_config(args.config)
    sig = read_wav(args.wav)
    params = _stft_params(args, cfg)
    sc = _sc_config(args, cfg)
    field = analyze(foa_stft(sig, params), sc.l_frames)
    if args.out:
        export_matrix_csv(field.averaged_intensity_magnitude(), args.out)
        print(f"wrote {args.out}")
    if args.dump_energy:
        export_matrix_csv(field.e, args.dump_energy)
        print(f"wrote {args.dump_energy}")
    if args.dump_diffuseness:
        export_matrix_csv(field.d, args.dump_diffuseness)
        print(f"wrote {args.dump_diffuseness}")
    print(f"seed {_seed(args, cfg)}")
    print(f"frames {field.n_frames}")
    print(f"bins {field.n_bins}")
    print(f"mean_energy {float(field.e.mean()):.6e}")
    print(f"median_diffuseness {float(np.median(field.d)):.6f}")
    v = field.i.sum(axis=(0, 1))
    norm = float(np.linalg.norm(v))
    if norm > 0:
        u = v / norm
        az = math.degrees(math.atan2(u[1], u[0]))
        el = math.degrees(math.atan2(u[2], math.hypot(u[0], u[1])))
        print(f"dominant_direction {u[0]:.3f} {u[1]:.3f} {u[2]:.3f}")
        print(f"dominant_azimuth_deg {az:.2f}")
        print(f"dominant_elevation_deg {el:.2f}")
    else:
        print("dominant_direction none")
    return EXIT_OK


def cmd_scloss(args) -> int:
    cfg = _load_config(args.config)
    sig_in = read_wav(args.input)
    sig_rec = read_wav(args.recon)
    if sig_in.sample_rate != sig_rec.sample_rate:
        raise SampleRateMismatchError(
            f"sample rates differ: {sig_in.sample_rate} vs {sig_rec.sample_rate}"
        )
    params = _stft_params(args, cfg)
    sc = _sc_config(args, cfg)
    breakdown = sc_loss(foa_stft(sig_in, params), foa_stft(sig_rec, params), sc)
    print(f"seed {_seed(args, cfg)}")
    print(f"loss {breakdown.loss:.6e}")
    print(f"active_fraction {breakdown.active_fraction:.6f}")
    if args.dump:
        os.makedirs(args.dump, exist_ok=True)
        for name, grid in (
            ("s", breakdown.s),
            ("m", breakdown.m),
            ("w", breakdown.w),
            ("contribution", breakdown.contribution()),
        ):
            out = os.path.join(args.dump, f"{name}.csv")
            export_matrix_csv(grid, out)
            print(f"wrote {out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = _load_config(args.config)
    seed = _seed(args, cfg)
    cases = int(_pick(args, cfg, "cases", 8))
    frames = int(_pick(args, cfg, "frames", 12))
    fft_size = int(_pick(args, cfg, "fft_size", 64))
    threshold = float(_pick(args, cfg, "threshold", DEFAULT_THRESHOLD))
    sc = _sc_config(args, cfg)
    if cases < 1:
        raise ValidationError(f"need at least one case, got {cases}")
    worst = 0.0
    for i in range(cases):
        spec_in, spec_rec = random_spectrum_pair(seed + i, frames, fft_size)
        report = check_spectrum_gradient(
            spec_in,
            spec_rec,
            sc,
            seed=seed + 7919 + i,
            threshold=threshold,
            inject_sign_flip=args.inject_sign_flip,
        )
        worst = max(worst, report.max_rel_error)
    print(f"seed {seed}")
    print(f"cases {cases}")
    print(f"max_rel_error {worst:.3e}")
    print(f"threshold {threshold:.1e}")
    if worst < threshold:
        print("PASS")
        return EXIT_OK
    print("FAIL")
    return EXIT_CHECK_FAILED


def cmd_vq(args) -> int:
    cfg = _load_config(args.config)
    seed = _seed(args, cfg)
    if args.vq_cmd == "train":
        n_codes = int(_pick(args, cfg, "n_codes", 256))
        if n_codes > MAX_TOKEN_CODES:
            raise ValidationError(
                f"codebook size {n_codes} exceeds the 16-bit token limit {MAX_TOKEN_CODES}"
            )
        batch = read_latents(args.latents)
        cb = kmeans_init(batch, n_codes, iters=int(_pick(args, cfg, "iters", 25)), seed=seed)
        write_codebook(args.codebook, cb)
        idx, _q, commitment = quantize(cb, batch)
        stats = codebook_stats(cb, idx)
        print(f"seed {seed}")
        print(f"codes {cb.n_codes}")
        print(f"dim {cb.dim}")
        print(f"perplexity {stats['perplexity']:.3f}")
        print(f"usage_fraction {stats['usage_fraction']:.3f}")
        print(f"commitment {commitment:.6e}")
        print(f"wrote {args.codebook}")
        return EXIT_OK
    if args.vq_cmd == "encode":
        cb = read_codebook(args.codebook)
        batch = read_latents(args.latents)
        idx, _q, commitment = quantize(cb, batch)
        write_tokens(args.tokens, idx, cb.n_codes)
        print(f"seed {seed}")
        print(f"tokens {idx.size}")
        print(f"commitment {commitment:.6e}")
        print(f"wrote {args.tokens}")
        return EXIT_OK
    # stats
    cb = read_codebook(args.codebook)
    batch = read_latents(args.latents)
    idx, _q, commitment = quantize(cb, batch)
    stats = codebook_stats(cb, idx)
    print(f"seed {seed}")
    print(f"codes {cb.n_codes}")
    print(f"perplexity {stats['perplexity']:.3f}")
    print(f"usage_fraction {stats['usage_fraction']:.3f}")
    print(f"commitment {commitment:.6e}")
    return EXIT_OK


def _truth_direction(path):
    """Direction from a truth sidecar, but only for single-source scenes."""
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    sources = payload.get("sources", [])
    if len(sources) != 1:
        return None
    s = sources[0]
    return Direction.from_degrees(float(s["azimuth_deg"]), float(s["elevation_deg"]))


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    seed = _seed(args, cfg)
    params = _stft_params(args, cfg)
    sc = _sc_config(args, cfg)
    truth_dir = args.truth_dir or args.input_dir
    names = sorted(
        n for n in os.listdir(args.input_dir) if n.lower().endswith(".wav")
    )
    pairs = []
    for name in names:
        recon_path = os.path.join(args.recon_dir, name)
        if not os.path.exists(recon_path):
            raise ValidationError(f"no reconstruction for {name} in {args.recon_dir}")
        pairs.append((name, os.path.join(args.input_dir, name), recon_path))
    if not pairs:
        raise ValidationError(f"no .wav files found in {args.input_dir}")

    reports = []
    rows = []
    for name, in_path, rec_path in pairs:
        x = read_wav(in_path)
        y = read_wav(rec_path)
        truth = _truth_direction(
            os.path.join(truth_dir, os.path.splitext(name)[0] + ".truth.json")
        )
        try:
            rep = evaluate_pair(x, y, truth, sc, params)
        except NoDirectionalEnergyError:
            from .metrics import mel_distance, stft_distance

            rep = EvalReport(
                stft_distance=stft_distance(x, y), mel_distance=mel_distance(x, y)
            )
        reports.append(rep)
        rows.append((name, rep))

    aggregate = aggregate_reports(reports)
    aggregate["seed"] = seed
    print(f"seed {seed}")
    print(f"files {len(reports)}")
    for key in ("stft_distance", "mel_distance", "azimuth_error_deg",
                "elevation_error_deg", "angular_error_deg"):
        val = aggregate[key]
        print(f"{key} {'none' if val is None else format(val, '.6e')}")
    if args.out_csv:
        header = ("file,stft_distance,mel_distance,azimuth_error_deg,"
                  "elevation_error_deg,angular_error_deg")
        lines = [header]
        for name, rep in rows:
            d = rep.to_dict()
            cells = [name] + [
                "" if d[k] is None else repr(d[k])
                for k in ("stft_distance", "mel_distance", "azimuth_error_deg",
                          "elevation_error_deg", "angular_error_deg")
            ]
            lines.append(",".join(cells))
        _write_text_atomic(args.out_csv, "\n".join(lines) + "\n")
        print(f"wrote {args.out_csv}")
    if args.out_json:
        write_json_atomic(args.out_json, aggregate)
        print(f"wrote {args.out_json}")
    return EXIT_OK


def _write_text_atomic(path, text: str) -> None:
    from .wavio import _atomic_write_bytes

    _atomic_write_bytes(path, text.encode("utf-8"))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of default option values")
    p.add_argument("--seed", type=int, help="seed to record and use (default 0)")


def _add_stft(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fft-size", type=int, dest="fft_size", help="FFT size (default 1024)")
    p.add_argument("--hop", type=int, help="hop size in samples (default 256)")
    p.add_argument("--win-length", type=int, dest="win_length",
                   help="window length (default: fft size)")


def _add_sc(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-e", type=float, dest="tau_e",
                   help="energy threshold (default 1e-6)")
    p.add_argument("--tau-d", type=float, dest="tau_d",
                   help="diffuseness threshold (default 0.95)")
    p.add_argument("--eps", type=float, help="cosine stabilizer (default 1e-8)")
    p.add_argument("--avg-frames", type=int, dest="avg_frames",
                   help="diffuseness averaging window in frames (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foalab",
        description="First-order ambisonics scene synthesis, analysis, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spatialize", help="render a scene manifest to a 4-channel WAV")
    p.add_argument("manifest", help="scene manifest JSON")
    p.add_argument("audio_dir", help="directory holding the mono source WAVs")
    p.add_argument("out", help="output FOA WAV path (truth sidecar written next to it)")
    p.add_argument("--sample-rate", type=int, dest="sample_rate",
                   help="scene sample rate (default 24000)")
    p.add_argument("--encoding", choices=("float32", "pcm16"), help="WAV sample format")
    _add_common(p)
    p.set_defaults(func=cmd_spatialize)

    p = sub.add_parser("analyze", help="per-bin energy/intensity/diffuseness analysis")
    p.add_argument("wav", help="4-channel WAV to analyze")
    p.add_argument("--out", help="CSV path for the averaged intensity-magnitude grid")
    p.add_argument("--dump-energy", dest="dump_energy", help="CSV path for the energy grid")
    p.add_argument("--dump-diffuseness", dest="dump_diffuseness",
                   help="CSV path for the diffuseness grid")
    _add_stft(p)
    _add_sc(p)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scloss", help="spatial-consistency loss between two WAVs")
    p.add_argument("input", help="reference 4-channel WAV")
    p.add_argument("recon", help="reconstruction 4-channel WAV")
    p.add_argument("--dump", help="directory for s/m/w/contribution CSV grids")
    _add_stft(p)
    _add_sc(p)
    _add_common(p)
    p.set_defaults(func=cmd_scloss)

    p = sub.add_parser("gradcheck", help="finite-difference check of the analytic gradient")
    p.add_argument("--cases", type=int, help="number of random cases (default 8)")
    p.add_argument("--frames", type=int, help="frames per random spectrum (default 12)")
    p.add_argument("--fft-size", type=int, dest="fft_size",
                   help="FFT size of random spectra (default 64)")
    p.add_argument("--threshold", type=float, help="max relative error allowed (default 1e-4)")
    p.add_argument("--inject-sign-flip", action="store_true", dest="inject_sign_flip",
                   help="negate the analytic gradient (self-test hook; must FAIL)")
    _add_sc(p)
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("vq", help="codebook training, token encoding, and stats")
    vq_sub = p.add_subparsers(dest="vq_cmd", required=True)

    q = vq_sub.add_parser("train", help="k-means initialize a codebook from latents")
    q.add_argument("latents", help="latent batch file")
    q.add_argument("codebook", help="output codebook file")
    q.add_argument("--n-codes", type=int, dest="n_codes", help="codebook size (default 256)")
    q.add_argument("--iters", type=int, help="Lloyd iterations (default 25)")
    _add_common(q)
    q.set_defaults(func=cmd_vq)

    q = vq_sub.add_parser("encode", help="quantize latents to a token stream")
    q.add_argument("codebook", help="codebook file")
    q.add_argument("latents", help="latent batch file")
    q.add_argument("tokens", help="output token stream (uint16)")
    _add_common(q)
    q.set_defaults(func=cmd_vq)

    q = vq_sub.add_parser("stats", help="perplexity and usage of a codebook on latents")
    q.add_argument("codebook", help="codebook file")
    q.add_argument("latents", help="latent batch file")
    _add_common(q)
    q.set_defaults(func=cmd_vq)

    p = sub.add_parser("evaluate", help="batch metrics for input/reconstruction pairs")
    p.add_argument("input_dir", help="directory of reference WAVs")
    p.add_argument("recon_dir", help="directory of reconstructions (matching file names)")
    p.add_argument("--truth-dir", dest="truth_dir",
                   help="directory of *.truth.json sidecars (default: input dir)")
    p.add_argument("--out-csv", dest="out_csv", help="per-file CSV report path")
    p.add_argument("--out-json", dest="out_json", help="aggregate JSON report path")
    _add_stft(p)
    _add_sc(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FoalabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
