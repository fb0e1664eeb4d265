#include "cleanbench/common.hpp"

#include <charconv>
#include <cmath>

namespace cleanbench {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

thread_local std::optional<std::chrono::steady_clock::time_point> t_deadline;

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index) {
    // FNV-1a over the tag, then mixed with master and index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(master ^ h) + index);
}

std::string format_number(double value) {
    if (value == 0.0) value = 0.0;  // folds -0
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::string_view body = text;
    if (body.front() == '+') body.remove_prefix(1);
    if (body.empty()) return std::nullopt;
    double value = 0.0;
    auto res = std::from_chars(body.data(), body.data() + body.size(), value);
    if (res.ec != std::errc{} || res.ptr != body.data() + body.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

DeadlineScope::DeadlineScope(std::optional<std::chrono::steady_clock::time_point> deadline)
    : previous_(t_deadline) {
    t_deadline = deadline;
}

DeadlineScope::~DeadlineScope() { t_deadline = previous_; }

bool deadline_passed() {
    return t_deadline && std::chrono::steady_clock::now() > *t_deadline;
}

void check_deadline() {
    if (deadline_passed()) throw TimeoutError("deadline exceeded");
}

std::optional<std::chrono::steady_clock::time_point> current_deadline() { return t_deadline; }

}  // namespace cleanbench
