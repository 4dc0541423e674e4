#!/usr/bin/env python3
"""
Output files: CSV tables, JSON documents and the metadata sidecar emitted with every artifact. All files are written
atomically (temporary file in the target folder + rename), readers never see a half-written file.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 11/10/26
"""
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, asdict

import pandas as pd

from potluck.common import VERSION


def atomic_write(filename: str, contents: str):
    """
    Writes contents into filename through a temporary file in the same folder
    """
    folder = os.path.dirname(os.path.abspath(filename))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(contents)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_dataframe(df: pd.DataFrame, filename: str):
    atomic_write(filename, df.to_csv(index=False, na_rep="nan", lineterminator="\n"))


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def write_json(doc: dict, filename: str):
    atomic_write(filename, dumps(doc) + "\n")


def canonical_hash(doc: dict) -> str:
    """SHA-256 of the canonical JSON form of doc (sorted keys, no whitespace)"""
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def sidecar_name(filename: str) -> str:
    """trajectory.csv -> trajectory.meta.json"""
    return os.path.splitext(filename)[0] + ".meta.json"


@dataclass
class RunMetadata:
    scenario_hash: str
    seed: int | None  # None for computations without randomness
    generator: str | None
    wall_time: float
    command: str
    weight_verdict: dict = None
    tool_version: str = VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, artifact: str) -> str:
        """Writes the sidecar of the artifact file and returns its name"""
        filename = sidecar_name(artifact)
        write_json(self.to_dict(), filename)
        return filename
