#include "epiforge/http_provider.hpp"

#include <fmt/format.h>
#include <httplib.h>

namespace epiforge::enrich {

namespace {

struct BaseUrl {
    std::string origin; ///< scheme://host[:port]
    std::string path;   ///< prefix without trailing slash
};

BaseUrl split_base(const std::string &base) {
    const auto scheme = base.find("://");
    if (scheme == std::string::npos) {
        throw std::invalid_argument(fmt::format("base URL '{}' has no scheme", base));
    }
    const auto slash = base.find('/', scheme + 3);
    BaseUrl out;
    out.origin = base.substr(0, slash);
    out.path = slash == std::string::npos ? "" : base.substr(slash);
    while (!out.path.empty() && out.path.back() == '/') {
        out.path.pop_back();
    }
    return out;
}

} // namespace

std::string url_encode(std::string_view text) {
    std::string out;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else if (c == ' ') {
            out.push_back('+');
        } else {
            out += fmt::format("%{:02X}", c);
        }
    }
    return out;
}

HttpProvider::HttpProvider(HttpEndpoints endpoints) : endpoints_(std::move(endpoints)) {}

std::string HttpProvider::target(const ProviderRequest &request) const {
    const auto coords = format_coord(request.geo.lat) + "," + format_coord(request.geo.lon);
    switch (request.kind) {
    case ProviderKind::Geocode:
        return fmt::format("{}/geocode/json?address={}&key={}",
                           split_base(endpoints_.geocode_base).path, url_encode(request.country),
                           url_encode(endpoints_.geocode_key));
    case ProviderKind::Timezone:
        return fmt::format("{}/timezone/json?location={}&timestamp={}&key={}",
                           split_base(endpoints_.timezone_base).path, coords, request.timestamp,
                           url_encode(endpoints_.timezone_key));
    case ProviderKind::Weather:
        return fmt::format("{}/forecast/{}/{},{}", split_base(endpoints_.weather_base).path,
                           url_encode(endpoints_.weather_key), coords, request.timestamp);
    }
    throw std::logic_error("unknown provider kind");
}

ProviderResponse HttpProvider::fetch(const ProviderRequest &request) {
    const std::string &base = request.kind == ProviderKind::Geocode    ? endpoints_.geocode_base
                              : request.kind == ProviderKind::Timezone ? endpoints_.timezone_base
                                                                       : endpoints_.weather_base;
    httplib::Client client(split_base(base).origin);
    client.set_connection_timeout(endpoints_.timeout_seconds);
    client.set_read_timeout(endpoints_.timeout_seconds);
    client.set_follow_location(true);

    auto result = client.Get(target(request));
    if (!result) {
        throw TransientProviderError(fmt::format("{} request failed: {}", to_string(request.kind),
                                                 httplib::to_string(result.error())));
    }
    if (result->status >= 500) {
        throw TransientProviderError(
            fmt::format("{} provider returned HTTP {}", to_string(request.kind), result->status));
    }
    return {result->body};
}

} // namespace epiforge::enrich
