#pragma once

namespace ssf {

/// Routes library logs to stderr. Level comes from SSF_LOG_LEVEL
/// (trace, debug, info, warn, error, critical, off); default warn.
void init_logging();

}  // namespace ssf
