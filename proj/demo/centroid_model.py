"""Nearest-centroid classifier speaking the line-delimited JSON protocol.

Each request line is {"id": ..., "values": [[...], ...]} (dimensions by time
steps); each reply is {"id": ..., "scores": {class: score}}.
"""

import json
import sys
from pathlib import Path

import numpy as np


def load(data_dir):
    data_dir = Path(data_dir)
    dims = sorted(data_dir.glob("dim_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    x = np.stack([np.loadtxt(p, delimiter=",", ndmin=2) for p in dims], axis=1)
    labels = [line.strip() for line in (data_dir / "labels.csv").read_text().splitlines() if line.strip()]
    return x, labels


def main():
    x, labels = load(sys.argv[1])
    classes = sorted(set(labels))
    centroids = {c: x[[i for i, l in enumerate(labels) if l == c]].mean(axis=0) for c in classes}
    for line in sys.stdin:
        req = json.loads(line)
        v = np.asarray(req["values"], dtype=float)
        dist = {c: float(np.linalg.norm(v - m)) for c, m in centroids.items()}
        best = min(classes, key=lambda c: (dist[c], c))
        scores = {c: 1.0 if c == best else 0.0 for c in classes}
        print(json.dumps({"id": req["id"], "scores": scores}), flush=True)


if __name__ == "__main__":
    main()
