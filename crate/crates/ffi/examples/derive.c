/* cc derive.c -I../include -L../../../target/release -lcorrineq_ffi -o derive */
#include <stdio.h>
#include "corrineq.h"

int main(int argc, char **argv) {
    const char *src = argc > 1 ? argv[1] : "(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2";
    CiExpression *expr = NULL;
    CiInequality *ineq = NULL;
    char *text = NULL;
    int64_t lo, hi;

    if (ci_expression_parse(src, &expr) != CI_STATUS_OK) {
        fprintf(stderr, "error: %s\n", ci_last_error());
        return 2;
    }
    CiStatus st = ci_inequality_derive(expr, &ineq);
    ci_expression_free(expr);
    if (st != CI_STATUS_OK) {
        fprintf(stderr, "error: %s\n", ci_last_error());
        return 2;
    }
    ci_inequality_format(ineq, &text);
    ci_inequality_classical_range(ineq, &lo, &hi);
    printf("%s\nclassical range: [%lld, %lld]\n", text, (long long)lo, (long long)hi);
    ci_string_free(text);
    ci_inequality_free(ineq);
    return 0;
}
