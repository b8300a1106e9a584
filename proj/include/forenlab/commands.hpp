#pragma once

#include "forenlab/runconfig.hpp"

namespace forenlab::cli {

// Command bodies behind the CLI. Each returns 0 on success and throws
// ConfigError / DataError / NumericError otherwise; main maps those to exit
// codes 2, 3 and 4.
int cmd_gen(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_infer(const RunConfig& cfg);
int cmd_spectrum(const RunConfig& cfg);

}  // namespace forenlab::cli
