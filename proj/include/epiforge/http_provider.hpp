#pragma once

#include "epiforge/providers.hpp"

#include <string>

namespace epiforge::enrich {

struct HttpEndpoints {
    std::string geocode_base;  ///< e.g. https://maps.googleapis.com/maps/api
    std::string timezone_base;
    std::string weather_base;  ///< e.g. https://api.darksky.net
    std::string geocode_key;
    std::string timezone_key;
    std::string weather_key;
    int timeout_seconds = 20;
};

/// Live provider speaking the geocode, timezone and forecast request shapes:
///   GET <base>/geocode/json?address=<name>&key=<key>
///   GET <base>/timezone/json?location=<lat>,<lon>&timestamp=<unix>&key=<key>
///   GET <base>/forecast/<key>/<lat>,<lon>,<unix>
/// Connection failures and 5xx responses throw TransientProviderError; any
/// other response body is returned as is.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpEndpoints endpoints);
    ProviderResponse fetch(const ProviderRequest &request) override;

    /// Request target (path and query) for `request`, without scheme or host.
    std::string target(const ProviderRequest &request) const;

private:
    HttpEndpoints endpoints_;
};

std::string url_encode(std::string_view text);

} // namespace epiforge::enrich
