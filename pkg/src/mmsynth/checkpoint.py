"""Checkpoint serialization to compressed npz.

Layout: a "meta" entry holding a JSON document (format version, model
specs, optimizer param groups, user metadata), then one array entry per
parameter ("g.<name>" / "d.<name>"), per optimizer slot
("optg.<idx>.<key>" / "optd.<idx>.<key>"), and the torch RNG state.
Everything is introspectable with numpy alone; torch is only needed to
restore live modules.
"""

from __future__ import annotations

import io
import json
import os
import zipfile
from pathlib import Path

import numpy as np
import torch

from .errors import DataError
from .model import Discriminator, DiscriminatorSpec, Generator, GeneratorSpec

FORMAT_VERSION = 1


def _module_arrays(prefix: str, module) -> dict:
    return {
        f"{prefix}.{name}": t.detach().cpu().numpy()
        for name, t in module.state_dict().items()
    }


def _optim_arrays(prefix: str, opt) -> tuple[dict, list]:
    sd = opt.state_dict()
    arrays = {}
    for idx, slot in sd["state"].items():
        for key, val in slot.items():
            if isinstance(val, torch.Tensor):
                arrays[f"{prefix}.{idx}.{key}"] = val.detach().cpu().numpy()
            else:
                arrays[f"{prefix}.{idx}.{key}"] = np.asarray(val)
    return arrays, sd["param_groups"]


def save_checkpoint(
    path,
    generator: Generator,
    discriminator: Discriminator,
    opt_g=None,
    opt_d=None,
    meta: dict | None = None,
) -> Path:
    """Atomic write: serialized to a temp file, then renamed into place."""
    path = Path(path)
    arrays = {}
    arrays.update(_module_arrays("g", generator))
    arrays.update(_module_arrays("d", discriminator))
    doc = {
        "format": FORMAT_VERSION,
        "generator_spec": generator.spec.to_dict(),
        "discriminator_spec": discriminator.spec.to_dict(),
        "meta": meta or {},
    }
    if opt_g is not None:
        a, groups = _optim_arrays("optg", opt_g)
        arrays.update(a)
        doc["optg_groups"] = groups
    if opt_d is not None:
        a, groups = _optim_arrays("optd", opt_d)
        arrays.update(a)
        doc["optd_groups"] = groups
    arrays["torch_rng"] = torch.get_rng_state().numpy()

    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        _write_npz(f, {"meta": np.asarray(json.dumps(doc, sort_keys=True)), **arrays})
    os.replace(tmp, path)
    return path


def _write_npz(fh, arrays: dict) -> None:
    # npz with zip entry timestamps pinned, so identical state always
    # produces identical bytes (np.savez stamps the current time)
    with zipfile.ZipFile(fh, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asanyarray(arr), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, buf.getvalue())


def _read_meta(z) -> dict:
    try:
        doc = json.loads(z["meta"].item())
    except (KeyError, json.JSONDecodeError) as e:
        raise DataError(f"checkpoint has no readable meta entry: {e}")
    if doc.get("format") != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format {doc.get('format')!r}")
    return doc


def _load_module(z, prefix: str, module) -> None:
    state = {}
    skip = len(prefix) + 1
    for key in z.files:
        if key.startswith(prefix + "."):
            state[key[skip:]] = torch.from_numpy(z[key].copy())
    try:
        module.load_state_dict(state)
    except RuntimeError as e:
        raise DataError(f"checkpoint does not match model: {e}")


def _load_optim(z, prefix: str, groups, opt) -> None:
    groups = [dict(g) for g in groups]
    for g in groups:
        # JSON round-trips tuples as lists; Adam stores betas as a tuple
        if "betas" in g:
            g["betas"] = tuple(g["betas"])
    state: dict = {}
    for key in z.files:
        if not key.startswith(prefix + "."):
            continue
        _, idx, name = key.split(".", 2)
        arr = z[key]
        slot = state.setdefault(int(idx), {})
        slot[name] = torch.as_tensor(arr.copy())
    try:
        opt.load_state_dict({"state": state, "param_groups": groups})
    except (ValueError, KeyError) as e:
        raise DataError(f"checkpoint optimizer state does not match: {e}")


def load_checkpoint(
    path,
    generator: Generator | None = None,
    discriminator: Discriminator | None = None,
    opt_g=None,
    opt_d=None,
    *,
    restore_rng: bool = False,
) -> dict:
    """Restore whatever live objects are passed; returns the meta document."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no checkpoint at {path}")
    with np.load(path, allow_pickle=False) as z:
        doc = _read_meta(z)
        if generator is not None:
            _load_module(z, "g", generator)
        if discriminator is not None:
            _load_module(z, "d", discriminator)
        if opt_g is not None:
            if "optg_groups" not in doc:
                raise DataError("checkpoint carries no generator optimizer state")
            _load_optim(z, "optg", doc["optg_groups"], opt_g)
        if opt_d is not None:
            if "optd_groups" not in doc:
                raise DataError("checkpoint carries no discriminator optimizer state")
            _load_optim(z, "optd", doc["optd_groups"], opt_d)
        if restore_rng:
            torch.set_rng_state(torch.from_numpy(z["torch_rng"].copy()))
    return doc


def build_models(path) -> tuple[Generator, Discriminator, dict]:
    """Construct models from the specs stored in a checkpoint and load them."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no checkpoint at {path}")
    with np.load(path, allow_pickle=False) as z:
        doc = _read_meta(z)
    generator = Generator(GeneratorSpec.from_dict(doc["generator_spec"]))
    discriminator = Discriminator(DiscriminatorSpec.from_dict(doc["discriminator_spec"]))
    load_checkpoint(path, generator, discriminator)
    return generator, discriminator, doc


def inspect_checkpoint(path) -> dict:
    """Meta plus {entry name: shape} without touching torch modules."""
    with np.load(Path(path), allow_pickle=False) as z:
        doc = _read_meta(z)
        shapes = {k: list(z[k].shape) for k in z.files if k != "meta"}
    return {"meta": doc, "arrays": shapes}
