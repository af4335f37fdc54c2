#include <stdio.h>
#include "curriculum.h"

int main(void) {
    CurConfig *cfg = NULL;
    CurResults *res = NULL;
    char msg[256];

    if (cur_config_load("/does/not/exist.toml", &cfg) != CUR_STATUS_IO) return 1;
    if (cur_last_error(msg, sizeof msg) == 0) return 2;

    if (cur_config_default(&cfg) != CUR_STATUS_OK) return 3;
    cur_config_set_trials(cfg, 2);
    cur_config_set_episodes(cfg, 2);
    cur_config_set_source_stop(cfg, "fixed:2");
    if (cur_experiment_run(cfg, 1, &res) != CUR_STATUS_OK) return 4;

    for (size_t e = 0; e < cur_results_episodes(res); e++) {
        CurCurvePoint p;
        if (cur_results_curve_point(res, e, &p) != CUR_STATUS_OK) return 5;
        printf("%zu,%.1f,%zu\n", p.episode, p.mean_cost, p.n_trials);
    }
    cur_results_free(res);
    cur_config_free(cfg);
    return 0;
}
