/* kfrt -- a tiny fixed-capacity matrix runtime for embedded state
 * estimators.
 *
 * All matrices are dense, row-major, caller-allocated.  Nothing here
 * allocates, nothing keeps state between calls, and every routine is
 * safe to run on a target without an OS.  Dimensions are capped at
 * KFRT_MAX_DIM so scratch space can live on the stack.
 *
 * The element type defaults to double; compile every translation unit
 * with -DKFRT_REAL=float for a single-precision build (mixing the two
 * in one program is an ODR violation and will not link cleanly).
 *
 * Aliasing rules: kfrt_mat_add, kfrt_mat_sub, kfrt_mat_scale, and
 * kfrt_mat_copy accept out == a (and out == b); kfrt_mat_invert accepts
 * out == a.  kfrt_mat_mul, kfrt_mat_vec_mul, and kfrt_mat_transpose
 * require out to be distinct from every input.
 */
#ifndef KFRT_H
#define KFRT_H

#ifndef KFRT_REAL
#define KFRT_REAL double
#endif

typedef KFRT_REAL kfrt_real;

/* Largest supported dimension on any axis. */
#define KFRT_MAX_DIM 16

/* A pivot whose magnitude falls below this is treated as singular. */
#define KFRT_PIVOT_TOLERANCE 1e-12

#define KFRT_OK 0
#define KFRT_ERR_SHAPE 1    /* dimension out of range or mismatched */
#define KFRT_ERR_SINGULAR 2 /* matrix not invertible at the tolerance */

/* out[ar x bc] = a[ar x ac] * b[br x bc]; requires ac == br. */
int kfrt_mat_mul(const kfrt_real *a, int ar, int ac,
                 const kfrt_real *b, int br, int bc, kfrt_real *out);

/* out[ar] = a[ar x ac] * v[ac]. */
int kfrt_mat_vec_mul(const kfrt_real *a, int ar, int ac,
                     const kfrt_real *v, kfrt_real *out);

/* out = a + b, elementwise; shapes must match. */
int kfrt_mat_add(const kfrt_real *a, int ar, int ac,
                 const kfrt_real *b, int br, int bc, kfrt_real *out);

/* out = a - b, elementwise; shapes must match. */
int kfrt_mat_sub(const kfrt_real *a, int ar, int ac,
                 const kfrt_real *b, int br, int bc, kfrt_real *out);

/* out[ac x ar] = transpose of a[ar x ac]. */
int kfrt_mat_transpose(const kfrt_real *a, int ar, int ac, kfrt_real *out);

/* out = k * a, elementwise. */
int kfrt_mat_scale(const kfrt_real *a, int ar, int ac, kfrt_real k,
                   kfrt_real *out);

/* out = n x n identity. */
int kfrt_mat_identity(kfrt_real *out, int n);

/* out = a, copying count elements. */
int kfrt_mat_copy(const kfrt_real *a, int count, kfrt_real *out);

/* out[n x n] = inverse of a[n x n] by Gauss-Jordan elimination with
 * partial pivoting.  On KFRT_ERR_SINGULAR or KFRT_ERR_SHAPE, out is
 * left untouched. */
int kfrt_mat_invert(const kfrt_real *a, int n, kfrt_real *out);

#endif /* KFRT_H */
