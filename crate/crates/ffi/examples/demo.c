/* Two clusters on a line, one labelled point in each.
 *
 *   cargo build --release -p tvseg-ffi
 *   cc crates/ffi/examples/demo.c -Icrates/ffi/include -Ltarget/release -ltvseg_ffi -lm -o demo
 *   LD_LIBRARY_PATH=target/release ./demo
 */
#include <stdio.h>

#include "tvseg.h"

int main(void) {
    const double points[] = {0.0, 0.1, 0.2, 0.3, 5.0, 5.1, 5.2, 5.3};
    const size_t nodes[] = {0, 7}, classes[] = {0, 1};
    double costs[16];
    size_t labels[8];
    TvsGraph *g = NULL;
    TvsResult *r = NULL;

    if (tvs_graph_build_knn(points, 8, 1, 3, TVS_WEIGHT_KIND_ZMP, 0.0, 3, &g) != TVS_STATUS_OK ||
        tvs_supervision_costs(8, 2, nodes, classes, 2, 500.0, costs) != TVS_STATUS_OK ||
        tvs_solve(g, costs, 2, NULL, NULL, &r) != TVS_STATUS_OK ||
        tvs_result_labels(r, labels, 8) != TVS_STATUS_OK) {
        fprintf(stderr, "tvseg: %s\n", tvs_last_error_message());
        tvs_graph_free(g);
        return 1;
    }
    printf("tvseg %s, %zu iterations:", tvs_version(), tvs_result_iterations(r));
    for (int x = 0; x < 8; x++) printf(" %zu", labels[x]);
    printf("\n");
    tvs_result_free(r);
    tvs_graph_free(g);
    return 0;
}
