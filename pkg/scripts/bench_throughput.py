"""Sweep pipeline settings over synthetic scenes and print a throughput table.

Example:
    python3 scripts/bench_throughput.py --frames 100 --workers 1 2 4 6
"""
import argparse
import json

from lanespace.pipeline import NullSink, PipelineConfig, gen_source, run_pipeline
from lanespace.regions import ExtractionConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=100)
    parser.add_argument("--warmup", type=int, default=10)
    parser.add_argument("--width", type=int, default=640)
    parser.add_argument("--height", type=int, default=480)
    parser.add_argument("--noise", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 6])
    parser.add_argument("--queue", type=int, default=8)
    parser.add_argument("--downsample", type=int, default=4)
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()

    spec = f"{args.frames}x{args.width}x{args.height}@{args.noise}"
    warm_spec = f"{args.warmup}x{args.width}x{args.height}@{args.noise}"
    rows = []
    for workers in args.workers:
        cfg = PipelineConfig(
            queue_capacity=args.queue,
            worker_pool_size=workers,
            extraction=ExtractionConfig(downsample_factor=args.downsample),
        )
        run_pipeline(gen_source(warm_spec, args.seed), NullSink(), cfg)
        stats = run_pipeline(gen_source(spec, args.seed), NullSink(), cfg)
        rows.append({"workers": workers, **stats.to_dict()})

    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    print(f"{args.frames} frames at {args.width}x{args.height}, noise {args.noise}")
    print(f"{'workers':>7}  {'fps':>7}  {'mean ms':>8}  {'p99 ms':>8}  {'in-flight':>9}")
    for row in rows:
        lat = row["latency_ms"]
        print(
            f"{row['workers']:>7}  {row['throughput_fps']:>7.1f}"
            f"  {lat['mean']:>8.2f}  {lat['p99']:>8.2f}  {row['max_in_flight']:>9}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
