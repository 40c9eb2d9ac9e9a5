#include <stdio.h>
#include <string.h>
#include "sentencelens.h"

int main(int argc, char **argv) {
    if (argc != 3) return 64;
    SlModel *model = NULL;
    if (sl_model_load(argv[1], &model) != SL_STATUS_OK) {
        fprintf(stderr, "%s\n", sl_last_error_message());
        return 1;
    }
    double months = 0.0;
    if (sl_predict(model, argv[2], &months) != SL_STATUS_OK) return 2;
    char *json = NULL;
    if (sl_explain_json(model, argv[2], 3, &json) != SL_STATUS_OK) return 3;
    int ok = strstr(json, "\"predicted_months\"") != NULL;
    sl_string_free(json);
    if (sl_predict(model, "", &months) != SL_STATUS_EMPTY_TEXT) return 4;
    if (sl_predict(model, argv[2], &months) != SL_STATUS_OK) return 2;
    printf("%.17g\n", months);
    sl_model_free(model);
    return ok ? 0 : 5;
}
