#!/usr/bin/env python3
"""Reference adapter: echoes actions; "win" scores 1 and ends the episode."""
import json
import sys

for line in sys.stdin:
    req = json.loads(line)
    if req["op"] == "reset":
        resp = {"text": "ready", "reward": 0, "done": False}
    else:
        action = req["action"]
        resp = {"text": "echo: " + action, "reward": 1 if action == "win" else 0, "done": action in ("win", "quit")}
    sys.stdout.write(json.dumps(resp) + "\n")
    sys.stdout.flush()
