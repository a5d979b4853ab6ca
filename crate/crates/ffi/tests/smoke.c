/* Minimal C client: constructs stencils, composes them, reads exact
 * weights, and runs the coherence and refinement checks. Exits 0 on
 * success, a distinct nonzero code at the first failed step. */

#include "plaquette.h"

#include <stdio.h>
#include <string.h>

static int fail(int code, const char *what) {
    const char *detail = pq_last_error();
    fprintf(stderr, "step failed: %s (%s)\n", what, detail ? detail : "no detail");
    return code;
}

int main(void) {
    PqStencil *fine = NULL;
    PqStencil *coarse = NULL;
    PqStencil *composed = NULL;

    if (pq_stencil_new("bf", 2, 2, &fine) != PQ_STATUS_OK)
        return fail(1, "build factor-2 stencil");
    if (pq_stencil_new("bf", 3, 2, &coarse) != PQ_STATUS_OK)
        return fail(2, "build factor-3 stencil");
    if (pq_compose(coarse, fine, &composed) != PQ_STATUS_OK)
        return fail(3, "compose");
    if (pq_stencil_factor(composed) != 6)
        return fail(4, "composed factor");
    if (pq_stencil_dim(composed) != 2)
        return fail(5, "composed dimension");
    if (pq_stencil_support_size(composed) != 121)
        return fail(6, "composed support size");

    int64_t origin[2] = {0, 0};
    char *weight = NULL;
    if (pq_stencil_weight(composed, origin, 2, &weight) != PQ_STATUS_OK)
        return fail(7, "weight at origin");
    if (strcmp(weight, "1/36") != 0) {
        fprintf(stderr, "origin weight was %s, expected 1/36\n", weight);
        return 8;
    }
    pq_string_free(weight);

    int64_t edge[2] = {5, 0};
    weight = NULL;
    if (pq_stencil_weight(composed, edge, 2, &weight) != PQ_STATUS_OK)
        return fail(9, "weight at edge");
    if (strcmp(weight, "1/216") != 0) {
        fprintf(stderr, "edge weight was %s, expected 1/216\n", weight);
        return 10;
    }
    pq_string_free(weight);

    PqStencil *bogus = NULL;
    if (pq_stencil_new("gaussian", 2, 2, &bogus) != PQ_STATUS_DOMAIN)
        return fail(11, "unknown scheme should be a domain error");
    const char *message = pq_last_error();
    if (message == NULL || strstr(message, "unknown scheme") == NULL)
        return fail(12, "unknown scheme message");

    bool coherent = false;
    if (pq_family_coherent("bf", 2, 3, &coherent) != PQ_STATUS_OK)
        return fail(13, "coherence check");
    if (!coherent)
        return fail(14, "bf family should be coherent");

    bool holds = false;
    if (pq_hat_refinement_check(4, &holds) != PQ_STATUS_OK)
        return fail(15, "refinement check");
    if (!holds)
        return fail(16, "refinement identity should hold");

    pq_stencil_free(composed);
    pq_stencil_free(coarse);
    pq_stencil_free(fine);
    return 0;
}
