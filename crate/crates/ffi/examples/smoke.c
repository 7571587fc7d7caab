/* Minimal C client: expansion vs exact trace on a two-site chain. */
#include <math.h>
#include <stdio.h>

#include "bhcluster.h"

static int check(BhStatus s, const char *what) {
    if (s != BH_STATUS_OK) {
        const char *msg = bh_last_error();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "");
        return 1;
    }
    return 0;
}

int main(void) {
    size_t dims[1] = {2};
    BhModel *model = NULL;
    BhReport *report = NULL;
    BhState *state = NULL;
    if (check(bh_model_finite_range(dims, 1, false, 0.5, 1, 1.0, 0.0, 0.4, &model), "model")) return 1;
    if (check(bh_approximate(model, 6, 1, 1, &report), "approximate")) return 1;
    if (check(bh_thermalize(model, 1, 1000, &state), "thermalize")) return 1;

    BhReportValues v;
    double log_z = 0.0;
    if (check(bh_report_values(report, &v), "values")) return 1;
    if (check(bh_state_log_z(state, &log_z), "log_z")) return 1;
    double closed = log(2.0 + 2.0 * cosh(0.4 * 0.5));
    printf("version %s schema %u\n", bh_version(), bh_schema_version());
    printf("f_beta %.15g exact %.15g closed %.15g\n", v.f_beta, log_z, closed);

    BhModel *bad = NULL;
    BhStatus s = bh_model_finite_range(dims, 1, false, 0.5, 1, -1.0, 0.0, 0.4, &bad);
    printf("bad model status %d: %s\n", (int)s, bh_last_error());

    bh_state_free(state);
    bh_report_free(report);
    bh_model_free(model);
    if (fabs(v.f_beta - closed) > 1e-9 || fabs(log_z - closed) > 1e-12 || s != BH_STATUS_CONFIG) return 2;
    return 0;
}
