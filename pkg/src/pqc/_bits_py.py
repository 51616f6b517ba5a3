"""Pure-Python bit-twiddling kernels.

This module and the compiled twin ``_bits_c`` implement exactly the same
interface and must produce bit-identical streams.  ``pqc._backend`` picks
one of the two at import time; everything else in the package goes through
that selection.

Stream layout: bits are packed MSB-first within bytes.  A gamma code for a
value v is the single bit ``1`` when v == 0, and otherwise b zero bits
followed by the b bits of v (b = bit length of v, so the leading ``1`` of v
terminates the zero run).  A signed gamma code appends one sign bit
(0 nonnegative, 1 negative) when v != 0.
"""

from .errors import CorruptPayloadError, TruncatedStreamError

BACKEND = "python"


class BitWriter:
    """Append-only MSB-first bit buffer."""

    __slots__ = ("_buf", "_nbits")

    def __init__(self):
        self._buf = bytearray()
        self._nbits = 0

    @property
    def bit_length(self):
        return self._nbits

    def write_bits(self, value, nbits):
        """Append the low ``nbits`` bits of ``value``, most significant first."""
        if nbits < 0 or value < 0 or value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        buf = self._buf
        pos = self._nbits
        total = pos + nbits
        need = (total + 7) >> 3
        if len(buf) < need:
            buf.extend(b"\x00" * (need - len(buf)))
        remaining = nbits
        while remaining:
            used = pos & 7
            take = 8 - used
            if take > remaining:
                take = remaining
            chunk = (value >> (remaining - take)) & ((1 << take) - 1)
            buf[pos >> 3] |= chunk << (8 - used - take)
            pos += take
            remaining -= take
        self._nbits = total

    def write_gamma(self, value):
        """Append the gamma code of a nonnegative value; return bits written."""
        if value < 0:
            raise ValueError("gamma code is defined for nonnegative values")
        if value == 0:
            self.write_bits(1, 1)
            return 1
        b = value.bit_length()
        # b leading zeros then the b bits of value, in one field of width 2b.
        self.write_bits(value, 2 * b)
        return 2 * b

    def write_signed_gamma(self, value):
        """Append gamma(|value|) plus a sign bit when value != 0."""
        if value == 0:
            self.write_bits(1, 1)
            return 1
        n = self.write_gamma(-value if value < 0 else value)
        self.write_bits(1 if value < 0 else 0, 1)
        return n + 1

    def getvalue(self):
        """Return the stream as bytes, zero-padded to a byte boundary."""
        return bytes(self._buf)


class BitReader:
    """MSB-first bit cursor over a bytes object."""

    __slots__ = ("_buf", "_nbits", "_pos")

    def __init__(self, data, bit_length=None):
        if bit_length is None:
            bit_length = 8 * len(data)
        elif bit_length < 0 or bit_length > 8 * len(data):
            raise ValueError("bit_length exceeds the supplied buffer")
        self._buf = data
        self._nbits = bit_length
        self._pos = 0

    @property
    def bit_length(self):
        return self._nbits

    def tell(self):
        return self._pos

    def read_bits(self, nbits):
        if self._pos + nbits > self._nbits:
            raise TruncatedStreamError(
                f"need {nbits} bits at offset {self._pos} of {self._nbits}"
            )
        buf = self._buf
        pos = self._pos
        value = 0
        remaining = nbits
        while remaining:
            used = pos & 7
            take = 8 - used
            if take > remaining:
                take = remaining
            chunk = (buf[pos >> 3] >> (8 - used - take)) & ((1 << take) - 1)
            value = (value << take) | chunk
            pos += take
            remaining -= take
        self._pos = pos
        return value

    def read_gamma(self):
        zeros = 0
        while self.read_bits(1) == 0:
            zeros += 1
        if zeros == 0:
            return 0
        if zeros == 1:
            return 1
        return (1 << (zeros - 1)) | self.read_bits(zeros - 1)

    def read_signed_gamma(self):
        magnitude = self.read_gamma()
        if magnitude == 0:
            return 0
        return -magnitude if self.read_bits(1) else magnitude


def interleave(coords, w):
    """Morton key of a coordinate tuple: bit i of axis 0 lands above bit i of
    axis 1, and so on, for i from w-1 down to 0."""
    if len(coords) == 2:
        x, y = coords
        return (_spread1(x) << 1) | _spread1(y)
    key = 0
    for bit in range(w - 1, -1, -1):
        for c in coords:
            key = (key << 1) | ((c >> bit) & 1)
    return key


def deinterleave(key, d, w):
    """Inverse of :func:`interleave`."""
    if d == 2:
        return (_compact1(key >> 1), _compact1(key))
    coords = [0] * d
    for bit in range(d * w):
        axis = bit % d
        coords[axis] = (coords[axis] << 1) | ((key >> (d * w - 1 - bit)) & 1)
    return tuple(coords)


def _spread1(v):
    # Insert a zero bit above every input bit; good for inputs below 2**32.
    v = (v | (v << 16)) & 0x0000FFFF0000FFFF
    v = (v | (v << 8)) & 0x00FF00FF00FF00FF
    v = (v | (v << 4)) & 0x0F0F0F0F0F0F0F0F
    v = (v | (v << 2)) & 0x3333333333333333
    v = (v | (v << 1)) & 0x5555555555555555
    return v


def _compact1(v):
    v &= 0x5555555555555555
    v = (v ^ (v >> 1)) & 0x3333333333333333
    v = (v ^ (v >> 2)) & 0x0F0F0F0F0F0F0F0F
    v = (v ^ (v >> 4)) & 0x00FF00FF00FF00FF
    v = (v ^ (v >> 8)) & 0x0000FFFF0000FFFF
    v = (v ^ (v >> 16)) & 0x00000000FFFFFFFF
    return v


def encode_records(writer, prev, prev_h, coords_seq, heights_seq, gamma, lossy):
    """Append one record per point to ``writer``; returns bits written.

    A record is signed-gamma(h_i - h_{i-1}) when ``lossy``, then per axis
    gamma((prev ^ cur) >> shift) with shift = max(h_i - gamma, 0).  Lossless
    records fix shift = 0 and omit the height delta.
    """
    d = len(prev)
    prev = list(prev)
    bits = 0
    shift = 0
    for i, cur in enumerate(coords_seq):
        if lossy:
            h = heights_seq[i]
            bits += writer.write_signed_gamma(h - prev_h)
            shift = h - gamma if h > gamma else 0
            prev_h = h
        for a in range(d):
            bits += writer.write_gamma((prev[a] ^ cur[a]) >> shift)
            prev[a] = cur[a]
    return bits


def decode_records(reader, prev, prev_h, d, w, gamma, lossy, end_bit):
    """Decode records until the cursor reaches ``end_bit``.

    Returns (coords_list, heights_list).  Heights are all zero in lossless
    mode.  Raises CorruptPayloadError / TruncatedStreamError on bad input.
    """
    prev = list(prev)
    coords_out = []
    heights_out = []
    shift = 0
    h = 0
    while reader.tell() < end_bit:
        if lossy:
            h = prev_h + reader.read_signed_gamma()
            if h < 0 or h > w:
                raise CorruptPayloadError(f"decoded height {h} outside [0, {w}]")
            shift = h - gamma if h > gamma else 0
            prev_h = h
        for a in range(d):
            delta = reader.read_gamma()
            if delta >> (w - shift):
                raise CorruptPayloadError(
                    f"decoded coordinate delta {delta} overflows width {w}"
                )
            prev[a] = ((prev[a] >> shift) ^ delta) << shift
        coords_out.append(tuple(prev))
        heights_out.append(h)
    return coords_out, heights_out
