#!/usr/bin/env python3
"""Toy worker: reads one JSON request per line, answers with a fitness."""
import json
import math
import sys

for line in sys.stdin:
    req = json.loads(line)
    p = req["params"]
    try:
        loss = (math.log(p["batch_size"]) - 2.5) ** 2 + (p["dropout_rate"] - 0.3) ** 2 + ((p["neurons"] - 200) / 300) ** 2
        out = {"id": req["id"], "fitness": loss}
    except Exception as exc:
        out = {"id": req["id"], "error": str(exc)}
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
