/* Loads a model from text, predicts two rows and prints the results. */
#include <stdio.h>
#include "calibench.h"

int main(int argc, char **argv) {
    if (argc != 2) return 64;
    FILE *f = fopen(argv[1], "rb");
    if (!f) return 65;
    static char text[1 << 16];
    size_t n = fread(text, 1, sizeof text - 1, f);
    fclose(f);
    text[n] = 0;

    CbModel *m = NULL;
    if (cb_model_from_text(text, &m) != CB_STATUS_OK) {
        char msg[256];
        cb_last_error(msg, sizeof msg);
        fprintf(stderr, "%s\n", msg);
        return 1;
    }
    double x[4] = {0.5, -1.0, 2.0, 0.25};
    double y[2];
    if (cb_model_predict(m, x, 2, 2, y, 2) != CB_STATUS_OK) return 2;
    CbFootprint fp;
    cb_model_footprint(m, &fp);
    printf("%.17g %.17g %zu\n", y[0], y[1], fp.stored);
    if (cb_model_predict(m, x, 2, 2, y, 1) != CB_STATUS_BUFFER_TOO_SMALL) return 3;
    cb_model_free(m);
    return 0;
}
