/* kfrt matrix routines.
 *
 * The scalar evaluation order in every routine is deliberate and fixed:
 * inner products accumulate left to right, and the inverse eliminates
 * column by column with a row swap, a pivot-row division, then a
 * subtraction from every other row.  Host-side reference filters follow
 * the same order, so results agree with them to rounding error rather
 * than to an algorithmic tolerance.  Do not "optimize" the loops into a
 * different association.
 */
#include "kfrt.h"

static int kfrt_dim_ok(int rows, int cols)
{
    return rows >= 1 && rows <= KFRT_MAX_DIM && cols >= 1 && cols <= KFRT_MAX_DIM;
}

int kfrt_mat_mul(const kfrt_real *a, int ar, int ac,
                 const kfrt_real *b, int br, int bc, kfrt_real *out)
{
    int i, j, k;
    if (!kfrt_dim_ok(ar, ac) || !kfrt_dim_ok(br, bc) || ac != br) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < ar; ++i) {
        for (j = 0; j < bc; ++j) {
            kfrt_real acc = (kfrt_real)0.0;
            for (k = 0; k < ac; ++k) {
                acc += a[i * ac + k] * b[k * bc + j];
            }
            out[i * bc + j] = acc;
        }
    }
    return KFRT_OK;
}

int kfrt_mat_vec_mul(const kfrt_real *a, int ar, int ac,
                     const kfrt_real *v, kfrt_real *out)
{
    int i, k;
    if (!kfrt_dim_ok(ar, ac)) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < ar; ++i) {
        kfrt_real acc = (kfrt_real)0.0;
        for (k = 0; k < ac; ++k) {
            acc += a[i * ac + k] * v[k];
        }
        out[i] = acc;
    }
    return KFRT_OK;
}

int kfrt_mat_add(const kfrt_real *a, int ar, int ac,
                 const kfrt_real *b, int br, int bc, kfrt_real *out)
{
    int i;
    if (!kfrt_dim_ok(ar, ac) || ar != br || ac != bc) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < ar * ac; ++i) {
        out[i] = a[i] + b[i];
    }
    return KFRT_OK;
}

int kfrt_mat_sub(const kfrt_real *a, int ar, int ac,
                 const kfrt_real *b, int br, int bc, kfrt_real *out)
{
    int i;
    if (!kfrt_dim_ok(ar, ac) || ar != br || ac != bc) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < ar * ac; ++i) {
        out[i] = a[i] - b[i];
    }
    return KFRT_OK;
}

int kfrt_mat_transpose(const kfrt_real *a, int ar, int ac, kfrt_real *out)
{
    int i, j;
    if (!kfrt_dim_ok(ar, ac)) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < ar; ++i) {
        for (j = 0; j < ac; ++j) {
            out[j * ar + i] = a[i * ac + j];
        }
    }
    return KFRT_OK;
}

int kfrt_mat_scale(const kfrt_real *a, int ar, int ac, kfrt_real k,
                   kfrt_real *out)
{
    int i;
    if (!kfrt_dim_ok(ar, ac)) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < ar * ac; ++i) {
        out[i] = k * a[i];
    }
    return KFRT_OK;
}

int kfrt_mat_identity(kfrt_real *out, int n)
{
    int i, j;
    if (!kfrt_dim_ok(n, n)) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < n; ++i) {
        for (j = 0; j < n; ++j) {
            out[i * n + j] = (i == j) ? (kfrt_real)1.0 : (kfrt_real)0.0;
        }
    }
    return KFRT_OK;
}

int kfrt_mat_copy(const kfrt_real *a, int count, kfrt_real *out)
{
    int i;
    if (count < 1 || count > KFRT_MAX_DIM * KFRT_MAX_DIM) {
        return KFRT_ERR_SHAPE;
    }
    for (i = 0; i < count; ++i) {
        out[i] = a[i];
    }
    return KFRT_OK;
}

static kfrt_real kfrt_fabs(kfrt_real x)
{
    return x < (kfrt_real)0.0 ? -x : x;
}

int kfrt_mat_invert(const kfrt_real *a, int n, kfrt_real *out)
{
    kfrt_real work[KFRT_MAX_DIM][KFRT_MAX_DIM];
    kfrt_real inv[KFRT_MAX_DIM][KFRT_MAX_DIM];
    int row, col, j;

    if (!kfrt_dim_ok(n, n)) {
        return KFRT_ERR_SHAPE;
    }
    for (row = 0; row < n; ++row) {
        for (col = 0; col < n; ++col) {
            work[row][col] = a[row * n + col];
            inv[row][col] = (row == col) ? (kfrt_real)1.0 : (kfrt_real)0.0;
        }
    }
    for (col = 0; col < n; ++col) {
        int pivot_row = col;
        kfrt_real best = kfrt_fabs(work[col][col]);
        kfrt_real pivot;
        for (row = col + 1; row < n; ++row) {
            if (kfrt_fabs(work[row][col]) > best) {
                best = kfrt_fabs(work[row][col]);
                pivot_row = row;
            }
        }
        if (best < (kfrt_real)KFRT_PIVOT_TOLERANCE) {
            return KFRT_ERR_SINGULAR;
        }
        if (pivot_row != col) {
            for (j = 0; j < n; ++j) {
                kfrt_real tw = work[col][j];
                kfrt_real ti = inv[col][j];
                work[col][j] = work[pivot_row][j];
                inv[col][j] = inv[pivot_row][j];
                work[pivot_row][j] = tw;
                inv[pivot_row][j] = ti;
            }
        }
        pivot = work[col][col];
        for (j = 0; j < n; ++j) {
            work[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for (row = 0; row < n; ++row) {
            kfrt_real factor;
            if (row == col) {
                continue;
            }
            factor = work[row][col];
            if (factor == (kfrt_real)0.0) {
                continue;
            }
            for (j = 0; j < n; ++j) {
                work[row][j] -= factor * work[col][j];
                inv[row][j] -= factor * inv[col][j];
            }
        }
    }
    for (row = 0; row < n; ++row) {
        for (col = 0; col < n; ++col) {
            out[row * n + col] = inv[row][col];
        }
    }
    return KFRT_OK;
}
