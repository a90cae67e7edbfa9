#include <math.h>
#include <stdio.h>
#include <string.h>

#include "heq.h"

int main(void) {
    HeqProblem *p = NULL;
    if (heq_problem_from_preset("remark3_prox", &p) != HEQ_STATUS_OK) {
        fprintf(stderr, "%s\n", heq_last_error());
        return 1;
    }
    HeqTrajectory *t = NULL;
    if (heq_run(p, true, &t) != HEQ_STATUS_OK) {
        fprintf(stderr, "%s\n", heq_last_error());
        return 1;
    }
    double x[2];
    if (heq_trajectory_final_point(t, x, 2) != HEQ_STATUS_OK) return 1;
    if (heq_trajectory_final_point(t, x, 1) != HEQ_STATUS_BUFFER_TOO_SMALL) return 1;
    double cert;
    if (heq_trajectory_certificate_min(t, &cert) != HEQ_STATUS_OK || cert < -1e-6) return 1;
    char *csv = NULL;
    if (heq_trajectory_csv(t, &csv) != HEQ_STATUS_OK || strncmp(csv, "k,", 2) != 0) return 1;
    printf("%zu %.3e\n", heq_trajectory_iterations(t), sqrt(x[0] * x[0] + x[1] * x[1]));
    heq_string_free(csv);
    heq_trajectory_free(t);
    heq_problem_free(p);

    if (heq_problem_from_toml("dimension = ", &p) != HEQ_STATUS_PARSE_ERROR) return 1;
    if (heq_last_error() == NULL) return 1;
    return 0;
}
