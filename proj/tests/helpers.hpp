// shared helpers for the test suites
#pragma once

#include <cstring>
#include <filesystem>
#include <string>

// runs fn, expecting it to throw E; returns the exception message, or "" if
// nothing (or the wrong type) was thrown. lets tests assert on message content.
template <class E, class Fn>
std::string catch_message(Fn&& fn) {
    try {
        fn();
    } catch (const E& e) {
        std::string m = e.what();
        return m.empty() ? std::string("<empty message>") : m;
    } catch (...) {
    }
    return {};
}

inline bool msg_has(const std::string& msg, const std::string& needle) {
    return msg.find(needle) != std::string::npos;
}

inline bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

inline std::filesystem::path test_tmp_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(d);
    return d;
}
