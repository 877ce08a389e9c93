#include <math.h>
#include <stdio.h>
#include "hyprel.h"

int main(void) {
    double e[4] = {0.0, 1.0, 2.0, 4.0};
    size_t a[4] = {0, 1, 2, 3};
    size_t b[4] = {0, 2, 1, 3};
    double v = 0.0, err = 0.0;
    if (hyprel_entropy_exact(e, 4, a, b, &v) != HYPREL_STATUS_OK) return 1;
    if (fabs(v - 2.0 * log(1.0 / 3.0)) > 1e-14) return 2;
    if (hyprel_entropy_numeric(e, 4, a, b, NULL, 0.3, 1e-3, 0.8, 1e-11, &v, &err) != HYPREL_STATUS_OK) return 3;
    if (fabs(v - 2.0 * log(1.0 / 3.0)) > 1e-6) return 4;

    HyprelFlow *f = NULL;
    if (hyprel_flow_new(0.0, 1.0, 100, 0.1, &f) != HYPREL_STATUS_OK) return 5;
    double e0 = 0.0, e1 = 0.0;
    hyprel_flow_entropy(f, &e0, &err);
    if (hyprel_flow_advance(f, 0.1, 0.25) != HYPREL_STATUS_OK) return 6;
    hyprel_flow_entropy(f, &e1, &err);
    hyprel_flow_free(f);
    if (!(e1 < e0)) return 7;

    if (hyprel_flow_new(0.0, -1.0, 100, 0.1, &f) != HYPREL_STATUS_INVALID_ARGUMENT) return 8;
    char msg[256];
    if (hyprel_last_error_message(msg, sizeof msg) == 0) return 9;
    printf("ok %s\n", hyprel_version());
    return 0;
}
