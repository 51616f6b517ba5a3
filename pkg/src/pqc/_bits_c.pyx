# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bit-twiddling kernels.

Mirrors ``pqc._bits_py`` exactly: same classes, same functions, and
bit-identical output streams (the parity tests in the suite hold both
implementations side by side).  Values fed to the gamma coder must fit in
63 bits here, which is far above anything a 32-bit coordinate stream can
produce; decoding a longer zero run raises CorruptPayloadError instead of
materialising a big integer like the pure twin would.
"""

from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memcpy, memset

from pqc.errors import CorruptPayloadError, TruncatedStreamError

BACKEND = "cython"

cdef unsigned long long _M21 = 0x1FFFFF


cdef class BitWriter:
    """Append-only MSB-first bit buffer."""

    cdef unsigned char* _buf
    cdef Py_ssize_t _cap
    cdef Py_ssize_t _nbits

    def __cinit__(self):
        self._cap = 64
        self._buf = <unsigned char*> malloc(self._cap)
        if self._buf == NULL:
            raise MemoryError()
        memset(self._buf, 0, self._cap)
        self._nbits = 0

    def __dealloc__(self):
        if self._buf != NULL:
            free(self._buf)

    @property
    def bit_length(self):
        return self._nbits

    cdef int _ensure(self, Py_ssize_t total_bits) except -1:
        cdef Py_ssize_t need = (total_bits + 7) >> 3
        cdef Py_ssize_t newcap = self._cap
        cdef unsigned char* newbuf
        if need <= self._cap:
            return 0
        while newcap < need:
            newcap <<= 1
        newbuf = <unsigned char*> realloc(self._buf, newcap)
        if newbuf == NULL:
            raise MemoryError()
        memset(newbuf + self._cap, 0, newcap - self._cap)
        self._buf = newbuf
        self._cap = newcap
        return 0

    cdef int _put(self, unsigned long long value, int nbits) except -1:
        cdef Py_ssize_t pos = self._nbits
        cdef int remaining = nbits
        cdef int used, take
        cdef unsigned long long chunk
        self._ensure(pos + nbits)
        while remaining:
            used = pos & 7
            take = 8 - used
            if take > remaining:
                take = remaining
            chunk = (value >> (remaining - take)) & ((<unsigned long long>1 << take) - 1)
            self._buf[pos >> 3] |= <unsigned char>(chunk << (8 - used - take))
            pos += take
            remaining -= take
        self._nbits = pos
        return 0

    def write_bits(self, value, int nbits):
        """Append the low ``nbits`` bits of ``value``, most significant first."""
        if nbits < 0 or nbits > 64 or value < 0 or (value >> nbits):
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        if nbits:
            self._put(value, nbits)

    cdef int _write_gamma(self, unsigned long long value) except -1:
        cdef int b = 0
        cdef unsigned long long v = value
        if value == 0:
            self._put(1, 1)
            return 1
        while v:
            v >>= 1
            b += 1
        self._put(value, 2 * b)
        return 2 * b

    def write_gamma(self, value):
        """Append the gamma code of a nonnegative value; return bits written."""
        if value < 0:
            raise ValueError("gamma code is defined for nonnegative values")
        return self._write_gamma(value)

    cdef int _write_signed_gamma(self, long long value) except -1:
        cdef int n
        if value == 0:
            self._put(1, 1)
            return 1
        if value < 0:
            n = self._write_gamma(<unsigned long long>(-value))
            self._put(1, 1)
        else:
            n = self._write_gamma(<unsigned long long>value)
            self._put(0, 1)
        return n + 1

    def write_signed_gamma(self, value):
        """Append gamma(|value|) plus a sign bit when value != 0."""
        return self._write_signed_gamma(value)

    def getvalue(self):
        """Return the stream as bytes, zero-padded to a byte boundary."""
        cdef Py_ssize_t nbytes = (self._nbits + 7) >> 3
        return self._buf[:nbytes]


cdef class BitReader:
    """MSB-first bit cursor over a bytes object."""

    cdef bytes _data
    cdef const unsigned char* _buf
    cdef Py_ssize_t _nbits
    cdef Py_ssize_t _pos

    def __cinit__(self, data, bit_length=None):
        self._data = bytes(data)
        self._buf = <const unsigned char*> self._data
        if bit_length is None:
            self._nbits = 8 * len(self._data)
        else:
            self._nbits = bit_length
            if self._nbits < 0 or self._nbits > 8 * len(self._data):
                raise ValueError("bit_length exceeds the supplied buffer")
        self._pos = 0

    @property
    def bit_length(self):
        return self._nbits

    def tell(self):
        return self._pos

    cdef int _need(self, Py_ssize_t nbits) except -1:
        if self._pos + nbits > self._nbits:
            raise TruncatedStreamError(
                f"need {nbits} bits at offset {self._pos} of {self._nbits}"
            )
        return 0

    cdef unsigned long long _raw(self, int nbits):
        cdef Py_ssize_t pos = self._pos
        cdef int remaining = nbits
        cdef int used, take
        cdef unsigned long long value = 0
        while remaining:
            used = pos & 7
            take = 8 - used
            if take > remaining:
                take = remaining
            value = (value << take) | (
                (self._buf[pos >> 3] >> (8 - used - take))
                & ((<unsigned long long>1 << take) - 1)
            )
            pos += take
            remaining -= take
        self._pos = pos
        return value

    def read_bits(self, int nbits):
        if nbits < 0 or nbits > 64:
            raise ValueError("read_bits handles at most 64 bits at a time")
        self._need(nbits)
        return self._raw(nbits)

    cdef long long _read_gamma(self) except -1:
        cdef int zeros = 0
        while True:
            self._need(1)
            if self._raw(1):
                break
            zeros += 1
            if zeros > 62:
                raise CorruptPayloadError("gamma zero run exceeds 62 bits")
        if zeros == 0:
            return 0
        if zeros == 1:
            return 1
        self._need(zeros - 1)
        return (<unsigned long long>1 << (zeros - 1)) | self._raw(zeros - 1)

    def read_gamma(self):
        return self._read_gamma()

    cdef long long _read_signed_gamma(self) except? -9223372036854775807:
        cdef long long magnitude = self._read_gamma()
        if magnitude == 0:
            return 0
        self._need(1)
        if self._raw(1):
            return -magnitude
        return magnitude

    def read_signed_gamma(self):
        return self._read_signed_gamma()


cdef unsigned long long _spread1(unsigned long long v):
    v = (v | (v << 16)) & 0x0000FFFF0000FFFF
    v = (v | (v << 8)) & 0x00FF00FF00FF00FF
    v = (v | (v << 4)) & 0x0F0F0F0F0F0F0F0F
    v = (v | (v << 2)) & 0x3333333333333333
    v = (v | (v << 1)) & 0x5555555555555555
    return v


cdef unsigned long long _compact1(unsigned long long v):
    v &= 0x5555555555555555
    v = (v ^ (v >> 1)) & 0x3333333333333333
    v = (v ^ (v >> 2)) & 0x0F0F0F0F0F0F0F0F
    v = (v ^ (v >> 4)) & 0x00FF00FF00FF00FF
    v = (v ^ (v >> 8)) & 0x0000FFFF0000FFFF
    v = (v ^ (v >> 16)) & 0x00000000FFFFFFFF
    return v


cdef unsigned long long _spread2(unsigned long long v):
    v &= _M21
    v = (v | (v << 32)) & 0x1F00000000FFFF
    v = (v | (v << 16)) & 0x1F0000FF0000FF
    v = (v | (v << 8)) & 0x100F00F00F00F00F
    v = (v | (v << 4)) & 0x10C30C30C30C30C3
    v = (v | (v << 2)) & 0x1249249249249249
    return v


cdef unsigned long long _compact2(unsigned long long v):
    v &= 0x1249249249249249
    v = (v ^ (v >> 2)) & 0x10C30C30C30C30C3
    v = (v ^ (v >> 4)) & 0x100F00F00F00F00F
    v = (v ^ (v >> 8)) & 0x1F0000FF0000FF
    v = (v ^ (v >> 16)) & 0x1F00000000FFFF
    v = (v ^ (v >> 32)) & 0x1FFFFF
    return v


cdef unsigned long long _morton3(unsigned long long x, unsigned long long y,
                                 unsigned long long z):
    return (_spread2(x) << 2) | (_spread2(y) << 1) | _spread2(z)


def interleave(coords, int w):
    """Morton key of a coordinate tuple; axis 0 highest within each group."""
    cdef int d = len(coords)
    cdef unsigned long long x, y, z
    if d == 2:
        x = coords[0]
        y = coords[1]
        return (_spread1(x) << 1) | _spread1(y)
    x = coords[0]
    y = coords[1]
    z = coords[2]
    if w <= 21:
        return _morton3(x, y, z)
    # 96-bit keys: interleave the high and low halves separately and join
    # them in Python integer space.
    hi = _morton3(x >> 21, y >> 21, z >> 21)
    lo = _morton3(x & _M21, y & _M21, z & _M21)
    return (int(hi) << 63) | int(lo)


def deinterleave(key, int d, int w):
    """Inverse of :func:`interleave`."""
    cdef unsigned long long k, hi
    if d == 2:
        k = key
        return (int(_compact1(k >> 1)), int(_compact1(k)))
    if w <= 21:
        k = key
        return (
            int(_compact2(k >> 2)),
            int(_compact2(k >> 1)),
            int(_compact2(k)),
        )
    hi = key >> 63
    k = key & ((<unsigned long long>1 << 63) - 1)
    return (
        int((_compact2(hi >> 2) << 21) | _compact2(k >> 2)),
        int((_compact2(hi >> 1) << 21) | _compact2(k >> 1)),
        int((_compact2(hi) << 21) | _compact2(k)),
    )


def encode_records(BitWriter writer, prev, prev_h, coords_seq, heights_seq,
                   int gamma, bint lossy):
    """Append one record per point to ``writer``; returns bits written.

    Same record layout as the pure twin: optional signed-gamma height
    delta, then per-axis gamma of the shifted xor against the predecessor.
    """
    cdef int d = len(prev)
    cdef unsigned long long prev_c[3]
    cdef unsigned long long c
    cdef int a, h, shift = 0
    cdef int ph = prev_h
    cdef Py_ssize_t i, n = len(coords_seq)
    cdef Py_ssize_t bits = 0
    for a in range(d):
        prev_c[a] = prev[a]
    for i in range(n):
        cur = coords_seq[i]
        if lossy:
            h = heights_seq[i]
            bits += writer._write_signed_gamma(h - ph)
            shift = h - gamma if h > gamma else 0
            ph = h
        for a in range(d):
            c = cur[a]
            bits += writer._write_gamma((prev_c[a] ^ c) >> shift)
            prev_c[a] = c
    return bits


def decode_records(BitReader reader, prev, prev_h, int d, int w, int gamma,
                   bint lossy, Py_ssize_t end_bit):
    """Decode records until the cursor reaches ``end_bit``.

    Returns (coords_list, heights_list); heights are all zero in lossless
    mode.  Raises CorruptPayloadError / TruncatedStreamError on bad input.
    """
    cdef unsigned long long prev_c[3]
    cdef unsigned long long delta
    cdef int a, h = 0, shift = 0
    cdef int ph = prev_h
    cdef long long dh
    coords_out = []
    heights_out = []
    for a in range(d):
        prev_c[a] = prev[a]
    while reader._pos < end_bit:
        if lossy:
            dh = reader._read_signed_gamma()
            h = ph + dh
            if h < 0 or h > w:
                raise CorruptPayloadError(f"decoded height {h} outside [0, {w}]")
            shift = h - gamma if h > gamma else 0
            ph = h
        for a in range(d):
            delta = <unsigned long long> reader._read_gamma()
            if delta >> (w - shift):
                raise CorruptPayloadError(
                    f"decoded coordinate delta {delta} overflows width {w}"
                )
            prev_c[a] = ((prev_c[a] >> shift) ^ delta) << shift
        if d == 2:
            coords_out.append((int(prev_c[0]), int(prev_c[1])))
        else:
            coords_out.append((int(prev_c[0]), int(prev_c[1]), int(prev_c[2])))
        heights_out.append(h)
    return coords_out, heights_out
