"""Binary file formats.

All formats are little-endian with a 4-byte magic:

* ``OFC1`` complex field: u32 width, u32 height, f64 pixel pitch (um), then
  width*height interleaved (re, im) f64, row-major.
* ``OPH1`` real image: same header, one f64 per pixel.
* ``RIV1`` volume: u32 nx, ny, nz, f64 voxel pitch, f64 n_medium, then f64
  voxels z-major.
* ``QCN1`` network: u8 input mode, u32 tensor count, per tensor u8 ndim and
  u32 dims, then every tensor as f64 in declaration order, then a u32 CRC32
  of everything before it.
"""
import struct
import zlib
from pathlib import Path

import numpy as np

from .field import ComplexField2D, PhaseImage, RealImage
from .forward import RIVolume


class FormatError(ValueError):
    """File content does not match the expected format."""


def _read(path, magic):
    data = Path(path).read_bytes()
    if data[:4] != magic:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    return data


def _image_header(data, path, per_pixel):
    if len(data) < 16:
        raise FormatError(f"{path}: truncated header")
    w, h = struct.unpack_from("<II", data, 4)
    (pitch,) = struct.unpack_from("<d", data, 12)
    need = 20 + w * h * per_pixel
    if len(data) != need:
        raise FormatError(f"{path}: expected {need} bytes for {w}x{h}, found {len(data)}")
    return w, h, pitch


def field_to_bytes(field: ComplexField2D) -> bytes:
    head = b"OFC1" + struct.pack("<IId", field.width, field.height, field.pixel_pitch)
    return head + np.ascontiguousarray(field.values).astype("<c16").tobytes()


def write_field(path, field: ComplexField2D):
    Path(path).write_bytes(field_to_bytes(field))


def read_field(path) -> ComplexField2D:
    data = _read(path, b"OFC1")
    w, h, pitch = _image_header(data, path, 16)
    v = np.frombuffer(data, dtype="<c16", offset=20).reshape(h, w)
    return ComplexField2D(v, pitch)


def write_image(path, image: RealImage):
    head = b"OPH1" + struct.pack("<IId", image.width, image.height, image.pixel_pitch)
    Path(path).write_bytes(head + np.ascontiguousarray(image.values).astype("<f8").tobytes())


def read_image(path, cls=PhaseImage):
    data = _read(path, b"OPH1")
    w, h, pitch = _image_header(data, path, 8)
    v = np.frombuffer(data, dtype="<f8", offset=20).reshape(h, w)
    return cls(v, pitch)


def write_volume(path, vol: RIVolume):
    nz, ny, nx = vol.values.shape
    head = b"RIV1" + struct.pack("<IIIdd", nx, ny, nz, vol.voxel_pitch, vol.n_medium)
    Path(path).write_bytes(head + np.ascontiguousarray(vol.values).astype("<f8").tobytes())


def read_volume(path) -> RIVolume:
    data = _read(path, b"RIV1")
    if len(data) < 32:
        raise FormatError(f"{path}: truncated header")
    nx, ny, nz, pitch, nm = struct.unpack_from("<IIIdd", data, 4)
    need = 32 + 8 * nx * ny * nz
    if len(data) != need:
        raise FormatError(f"{path}: expected {need} bytes, found {len(data)}")
    v = np.frombuffer(data, dtype="<f8", offset=32).reshape(nz, ny, nx)
    return RIVolume(v, pitch, nm)


_MODES = {"phase": 0, "amplitude": 1, "complex": 2}


def params_to_bytes(params) -> bytes:
    tensors = params.tensors()
    out = bytearray(b"QCN1")
    out += struct.pack("<BI", _MODES[params.input_mode], len(tensors))
    for t in tensors:
        out += struct.pack("<B", t.ndim) + struct.pack(f"<{t.ndim}I", *t.shape)
    for t in tensors:
        out += np.ascontiguousarray(t).astype("<f8").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def write_params(path, params):
    Path(path).write_bytes(params_to_bytes(params))


def read_params(path):
    from .net.model import NetParams

    data = _read(path, b"QCN1")
    if len(data) < 13:
        raise FormatError(f"{path}: truncated")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise FormatError(f"{path}: CRC mismatch")
    mode_byte, count = struct.unpack_from("<BI", data, 4)
    modes = {v: k for k, v in _MODES.items()}
    if mode_byte not in modes:
        raise FormatError(f"{path}: unknown input mode {mode_byte}")
    pos = 9
    shapes = []
    for _ in range(count):
        (nd,) = struct.unpack_from("<B", data, pos)
        shapes.append(struct.unpack_from(f"<{nd}I", data, pos + 1))
        pos += 1 + 4 * nd
    tensors = []
    for shp in shapes:
        n = int(np.prod(shp))
        if pos + 8 * n > len(data) - 4:
            raise FormatError(f"{path}: truncated tensor data")
        tensors.append(np.frombuffer(data, dtype="<f8", count=n, offset=pos).reshape(shp).astype(np.float64))
        pos += 8 * n
    if pos != len(data) - 4:
        raise FormatError(f"{path}: trailing bytes")
    return NetParams.from_tensors(tensors, modes[mode_byte])
