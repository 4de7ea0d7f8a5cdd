#include <math.h>
#include <stdio.h>
#include <string.h>

#include "robext.h"

#define CHECK(cond)                                                  \
  do {                                                               \
    if (!(cond)) {                                                   \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
              robext_last_error());                                  \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  RobextModel *hr = NULL;
  CHECK(robext_model_parse("HR(0.6)", &hr) == ROBEXT_STATUS_OK);

  double a = 0.0;
  CHECK(robext_pickands(hr, 0.5, &a) == ROBEXT_STATUS_OK);
  CHECK(fabs(a - 0.72574688224992645) < 1e-9);

  double lo = 0.0, hi = 0.0;
  CHECK(robext_sqrt_bound(hr, 0.4, ROBEXT_MEASURE_REFERENCE, 0.2, ROBEXT_DIRECTION_LOWER, &lo) == ROBEXT_STATUS_OK);
  CHECK(robext_sqrt_bound(hr, 0.4, ROBEXT_MEASURE_REFERENCE, 0.2, ROBEXT_DIRECTION_UPPER, &hi) == ROBEXT_STATUS_OK);
  CHECK(lo < hi);

  RobextBound b;
  CHECK(robext_exact_bound(hr, 0.4, ROBEXT_MEASURE_REFERENCE, 0.2, ROBEXT_DIRECTION_UPPER, &b) == ROBEXT_STATUS_OK);
  CHECK(b.regime == ROBEXT_REGIME_SQRT_EXACT);
  CHECK(fabs(b.exact_value - hi) < 1e-9);

  RobextModel *bad = (RobextModel *)1;
  CHECK(robext_model_husler_reiss(-1.0, &bad) == ROBEXT_STATUS_INVALID_PARAMETER);
  CHECK(bad == NULL);
  CHECK(strlen(robext_last_error()) > 0);
  CHECK(robext_pickands(NULL, 0.5, &a) == ROBEXT_STATUS_NULL_POINTER);

  char buf[64];
  size_t need = 0;
  CHECK(robext_model_describe(hr, buf, sizeof buf, &need) == ROBEXT_STATUS_OK);
  CHECK(strcmp(buf, "HR(0.6)") == 0 && need == 7);

  double w[2] = {1.0, 1.0};
  RobextPortfolio *p = NULL;
  CHECK(robext_portfolio_new(w, NULL, 2, 1.0, 1.0, &p) == ROBEXT_STATUS_OK);
  RobextVarBounds v;
  CHECK(robext_portfolio_var_bounds(p, 0.5, 2000, 3, &v) == ROBEXT_STATUS_OK);
  CHECK(fabs(v.ratio_lower - 2.0) < 1e-12 && fabs(v.ratio_upper - 2.0) < 1e-12);

  robext_portfolio_free(p);
  robext_model_free(hr);
  printf("ok %s\n", robext_version());
  return 0;
}
