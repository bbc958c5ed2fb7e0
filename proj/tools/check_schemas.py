#!/usr/bin/env python3
"""Validate committed configs, and any trial-record JSONL files given, against docs/schema."""
import glob
import json
import pathlib
import sys

import jsonschema

root = pathlib.Path(__file__).resolve().parent.parent


def schema(name):
    return json.loads((root / "docs" / "schema" / f"{name}.schema.json").read_text())


def main(argv):
    checks = [("scenario", sorted(glob.glob(str(root / "data/scenarios/*.json")))),
              ("experiment", sorted(glob.glob(str(root / "data/experiments/*.json"))))]
    for name, files in checks:
        s = schema(name)
        for f in files:
            jsonschema.validate(json.loads(pathlib.Path(f).read_text()), s)
        print(f"{name}: {len(files)} files valid")
    record = schema("trial_record")
    lines = 0
    for f in argv[1:]:
        for line in pathlib.Path(f).read_text().splitlines():
            jsonschema.validate(json.loads(line), record)
            lines += 1
    if lines:
        print(f"trial_record: {lines} records valid")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
