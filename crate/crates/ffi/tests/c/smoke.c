#include <stdio.h>
#include <string.h>

#include "swipt_mac.h"

int main(void) {
    SwiptScenario *s = NULL;
    SwiptPoint *p = NULL;
    double mu[2] = {0.5, 0.5};
    double rates[2];
    double sum = 0.0;
    size_t n = 0;

    if (swipt_scenario_reference(&s) != SWIPT_STATUS_OK) return 1;
    if (swipt_sum_rate(s, SWIPT_MODEL_IDEAL, &sum) != SWIPT_STATUS_OK) return 2;
    if (swipt_dual_solve(s, SWIPT_MODEL_IDEAL, mu, 2, &p) != SWIPT_STATUS_OK) return 3;
    if (swipt_point_rates(p, rates, 2, &n) != SWIPT_STATUS_OK || n != 2) return 4;
    if (swipt_point_rates(p, rates, 1, &n) != SWIPT_STATUS_BUFFER_TOO_SMALL) return 5;
    if (strlen(swipt_last_error_message()) == 0) return 6;
    printf("%s %.6f %.6f %.6f\n", swipt_version(), sum, rates[0], rates[1]);
    swipt_point_free(p);
    swipt_scenario_free(s);
    return 0;
}
