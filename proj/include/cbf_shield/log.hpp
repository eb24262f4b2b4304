#pragma once

namespace cbf_shield {

/// Applies CBF_SHIELD_LOG (trace, debug, info, warn, error, off) to the
/// default spdlog logger. Unset leaves the level at warn.
void init_logging();

}  // namespace cbf_shield
