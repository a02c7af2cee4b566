"""Test-only oracles written independently of the package internals."""


def _wrap(v, bits):
    v &= (1 << bits) - 1
    return v - (1 << bits) if v >= 1 << (bits - 1) else v


def brute_conv(x, weights, biases, z, s=1, out_shift=0, data_bits=16, acc_bits=32):
    """Nested-loop convolution over plain Python ints.

    x is [c][row][col], weights [k][c][j][i]; reads outside the image are zero.
    """
    ic = len(x)
    il = len(x[0])
    m = len(weights)
    fh = len(weights[0][0])
    fl = len(weights[0][0][0])
    ol = (il - fl + 2 * z) // s + 1
    lo, hi = -(1 << (data_bits - 1)), (1 << (data_bits - 1)) - 1
    out = []
    for k in range(m):
        plane = []
        for r in range(ol):
            line = []
            for q in range(ol):
                acc = _wrap(int(biases[k]), acc_bits)
                for c in range(ic):
                    for j in range(fh):
                        for i in range(fl):
                            rr, qq = r * s + j - z, q * s + i - z
                            if 0 <= rr < il and 0 <= qq < il:
                                p = _wrap(int(x[c][rr][qq]) * int(weights[k][c][j][i]),
                                          2 * data_bits)
                                acc = _wrap(acc + p, acc_bits)
                line.append(max(lo, min(hi, acc >> out_shift)))
            plane.append(line)
        out.append(plane)
    return out
