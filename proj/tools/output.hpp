#pragma once

// Locale-independent numeric formatting, output sinks and run manifests.

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sha256.hpp"

namespace aggdiff::tools {

/// Full-precision (17 significant digits) locale-free rendering; trailing
/// zeros are trimmed by the general format.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                   std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Buffers the payload; on flush writes it to stdout or to --out PATH plus
/// PATH.manifest.json with the digest and the effective configuration.
class OutputSink {
public:
    OutputSink(std::string out_path, nlohmann::json parameters,
               nlohmann::json quadrature, std::string command_line)
        : out_path_(std::move(out_path)),
          parameters_(std::move(parameters)),
          quadrature_(std::move(quadrature)),
          command_line_(std::move(command_line)),
          start_(std::chrono::steady_clock::now()) {}

    void append(const std::string& s) { payload_ += s; }

    void line(const std::string& s) {
        payload_ += s;
        payload_ += '\n';
    }

    void flush() {
        if (out_path_.empty()) {
            std::cout << payload_;
            std::cout.flush();
            return;
        }
        {
            std::ofstream f(out_path_, std::ios::binary);
            if (!f) throw std::runtime_error("cannot open output file: " + out_path_);
            f << payload_;
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        nlohmann::json manifest;
        manifest["command_line"] = command_line_;
        manifest["parameters"] = parameters_;
        manifest["quadrature"] = quadrature_;
        manifest["wall_time_s"] = wall;
        manifest["outputs"] = nlohmann::json::array(
            {{{"path", out_path_}, {"bytes", payload_.size()}, {"sha256", Sha256::of(payload_)}}});
        std::ofstream mf(out_path_ + ".manifest.json", std::ios::binary);
        if (!mf) throw std::runtime_error("cannot open manifest file");
        mf << manifest.dump(2) << '\n';
    }

private:
    std::string out_path_;
    std::string payload_;
    nlohmann::json parameters_;
    nlohmann::json quadrature_;
    std::string command_line_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace aggdiff::tools
