"""Run manifests, content digests, and atomic artifact writing.

Artifacts are written temp-then-rename so a crashed run never leaves a
partial file; the manifest lists every artifact with its sha256 so a rerun
(same config, same inputs) is checkable bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile


def sha256_bytes(data):
    return "sha256:" + hashlib.sha256(data).hexdigest()


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path, data):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload):
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_manifest(out_dir, command, config_echo, artifact_paths,
                   input_digest=None, toolkit_version="unknown"):
    """Write manifest.json describing one command run; returns its path."""
    artifacts = [{"path": os.path.relpath(p, out_dir), "sha256": sha256_file(p)}
                 for p in sorted(artifact_paths)]
    manifest = {
        "command": command,
        "toolkit_version": toolkit_version,
        "config": config_echo,
        "input_digest": input_digest,
        "artifacts": artifacts,
    }
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, manifest)
    return path
