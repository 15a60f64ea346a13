# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled multi-needle search; same contract as ``_kernel_py.find_all``.

Wu-Manber style: a bigram shift table over a window as long as the shortest
needle lets most of the buffer be skipped; candidate starts are verified with
memcmp. Line numbers are recovered afterwards with memchr. The whole scan runs
without the GIL so deep-scan worker threads overlap.
"""

from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcmp, memchr, memset


cdef int _push(Py_ssize_t** hits, Py_ssize_t* cap, Py_ssize_t count, Py_ssize_t j, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t* grown
    if count == cap[0]:
        grown = <Py_ssize_t*>realloc(hits[0], cap[0] * 6 * sizeof(Py_ssize_t))
        if grown == NULL:
            return -1
        hits[0] = grown
        cap[0] *= 2
    hits[0][3 * count] = j
    hits[0][3 * count + 1] = pos
    return 0


def find_all(const unsigned char[:] data, tuple needles):
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t k = len(needles)
    if n == 0 or k == 0:
        return []

    cdef list keep = [bytes(x) for x in needles]
    cdef const unsigned char** ptrs = <const unsigned char**>malloc(k * sizeof(void*))
    cdef Py_ssize_t* lens = <Py_ssize_t*>malloc(k * sizeof(Py_ssize_t))
    cdef unsigned char* shift = <unsigned char*>malloc(65536)
    cdef Py_ssize_t cap = 64, count = 0
    cdef Py_ssize_t* hits = <Py_ssize_t*>malloc(cap * 3 * sizeof(Py_ssize_t))
    cdef Py_ssize_t i, j, q, m = -1, pos, start, s, top
    cdef unsigned int h
    cdef bytes b
    cdef bint oom = False
    cdef const unsigned char* base = &data[0]
    cdef const unsigned char* nl
    cdef Py_ssize_t line, line_start, cursor
    if ptrs == NULL or lens == NULL or shift == NULL or hits == NULL:
        free(ptrs); free(lens); free(shift); free(hits)
        raise MemoryError()

    for j in range(k):
        b = keep[j]
        lens[j] = len(b)
        ptrs[j] = <const unsigned char*>(<char*>b)
        if lens[j] > 0 and (m < 0 or lens[j] < m):
            m = lens[j]

    with nogil:
        if m >= 2:
            # shifts are stored in a byte; longer skips are simply capped
            top = m - 1 if m - 1 < 255 else 255
            memset(shift, <int>top, 65536)
            for j in range(k):
                if lens[j] == 0:
                    continue
                for q in range(m - 1):
                    h = (ptrs[j][q] << 8) | ptrs[j][q + 1]
                    if m - 2 - q < shift[h]:
                        shift[h] = m - 2 - q
            pos = m - 1
            while pos < n:
                h = (base[pos - 1] << 8) | base[pos]
                s = shift[h]
                if s > 0:
                    pos += s
                    continue
                start = pos - m + 1
                for j in range(k):
                    if lens[j] == 0 or start + lens[j] > n or base[start] != ptrs[j][0]:
                        continue
                    if memcmp(base + start, ptrs[j], lens[j]) == 0:
                        if _push(&hits, &cap, count, j, start) < 0:
                            oom = True
                            break
                        count += 1
                if oom:
                    break
                pos += 1
        elif m == 1:
            for start in range(n):
                for j in range(k):
                    if lens[j] == 0 or start + lens[j] > n or base[start] != ptrs[j][0]:
                        continue
                    if memcmp(base + start, ptrs[j], lens[j]) == 0:
                        if _push(&hits, &cap, count, j, start) < 0:
                            oom = True
                            break
                        count += 1
                if oom:
                    break

        # hits are in (position, needle) order; convert positions to line/column
        line = 1
        line_start = 0
        cursor = 0
        if not oom:
            for i in range(count):
                pos = hits[3 * i + 1]
                while cursor < pos:
                    nl = <const unsigned char*>memchr(base + cursor, 10, pos - cursor)
                    if nl == NULL:
                        cursor = pos
                        break
                    line += 1
                    cursor = (nl - base) + 1
                    line_start = cursor
                hits[3 * i + 1] = line
                hits[3 * i + 2] = pos - line_start + 1

    free(ptrs)
    free(lens)
    free(shift)
    if oom:
        free(hits)
        raise MemoryError()
    out = [(hits[3 * i], hits[3 * i + 1], hits[3 * i + 2]) for i in range(count)]
    free(hits)
    return out
