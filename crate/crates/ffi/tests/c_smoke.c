#include <stdio.h>
#include <string.h>
#include "permstab.h"

int main(void) {
    PsPresentation *p = NULL;
    if (ps_presentation_new(2, 2, NULL, 0, &p) != PS_STATUS_OK) return 1;
    /* X_2 for d = 2 */
    const char *json = "{\"m\":2,\"n\":3,\"perms\":[[0,2,1],[2,1,0]]}";
    PsActionSpace *x = NULL;
    if (ps_action_space_from_json(json, &x) != PS_STATUS_OK) return 2;
    int64_t num = 0, den = 0;
    if (ps_local_defect(x, p, &num, &den) != PS_STATUS_OK) return 3;
    PsActionSpace *psi = NULL;
    char *report = NULL;
    if (ps_repair(x, p, NULL, &psi, &report) != PS_STATUS_OK) return 4;
    bool ok = false;
    if (ps_is_solution(psi, p, &ok) != PS_STATUS_OK || !ok) return 5;
    if (ps_action_space_from_json("{", &x) != PS_STATUS_INSTANCE) return 6;
    if (ps_last_error_message() == NULL) return 7;
    printf("%lld/%lld %zu\n", (long long)num, (long long)den, ps_action_space_n(psi));
    ps_string_free(report);
    ps_action_space_free(psi);
    ps_action_space_free(x);
    ps_presentation_free(p);
    return 0;
}
