#!/usr/bin/env python3
"""Validate every scene file in a directory against a JSON schema."""
import json
import pathlib
import sys

import jsonschema


def main() -> int:
    if len(sys.argv) != 3:
        print("usage: check_schema.py SCHEMA DIR", file=sys.stderr)
        return 2
    schema = json.loads(pathlib.Path(sys.argv[1]).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    files = sorted(pathlib.Path(sys.argv[2]).glob("*.json"))
    if not files:
        print("no scene files found", file=sys.stderr)
        return 1
    bad = 0
    for path in files:
        errors = sorted(validator.iter_errors(json.loads(path.read_text())), key=lambda e: list(e.path))
        for e in errors:
            where = "/".join(str(p) for p in e.path) or "<root>"
            print(f"{path.name}: {where}: {e.message}")
        bad += bool(errors)
        print(f"{path.name}: {'FAIL' if errors else 'ok'}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
