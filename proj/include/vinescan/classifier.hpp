// SPDX-License-Identifier: Apache-2.0
//
// Patch classifiers: the pluggable interface, a heuristic reference
// classifier driven by per-pixel channel statistics, and an adapter speaking
// the line-oriented wire protocol to an external process or TCP endpoint.
//
// Wire protocol, one request per patch:
//   -> "PATCH <id> <width> <height>\n" + width*height*3 raw RGB bytes
//   <- "SCORES <id> <s_bunch> <s_pole> <s_wood> <s_leaves> <s_background>\n"

#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "vinescan/image.hpp"
#include "vinescan/metrics.hpp"

namespace vinescan {

/// Five class scores summing to 1, indexed by ClassLabel.
struct ClassScores {
    std::array<double, kNumClasses> scores{};

    double operator[](ClassLabel c) const { return scores[static_cast<std::size_t>(c)]; }
    double& operator[](ClassLabel c) { return scores[static_cast<std::size_t>(c)]; }

    ClassLabel argmax() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < kNumClasses; ++i)
            if (scores[i] > scores[best]) best = i;
        return static_cast<ClassLabel>(best);
    }

    double sum() const {
        double s = 0.0;
        for (double v : scores) s += v;
        return s;
    }
};

class PatchClassifier {
public:
    virtual ~PatchClassifier() = default;
    virtual ClassScores classify(const RgbImage& patch, int patch_id) = 0;
};

/// Reference heuristic standing in for the CNNs. Votes per pixel into the
/// five classes from simple color rules, then turns weighted vote fractions
/// into scores through a sharpened softmax. Not meant to approach CNN
/// accuracy; it exercises the post-processing chain and the wire protocol.
class HeuristicClassifier : public PatchClassifier {
public:
    ClassScores classify(const RgbImage& patch, int /*patch_id*/) override {
        std::array<double, kNumClasses> fraction{};
        for (const RgbPixel& p : patch.data())
            fraction[static_cast<std::size_t>(classify_pixel(p))] += 1.0;
        const double n = static_cast<double>(patch.size());
        for (double& f : fraction) f /= n;

        // class weights boost the small-but-decisive classes over the leafy
        // backdrop; sharpness pushes confident patches toward one-hot scores
        // so probability maps stay decisive under mean-overlap blending
        static constexpr std::array<double, kNumClasses> kWeight = {1.0, 1.5, 4.0, 4.0, 6.0};
        static constexpr double kSharpness = 12.0;

        ClassScores out;
        double denom = 0.0;
        std::array<double, kNumClasses> e{};
        double max_logit = -1.0;
        for (std::size_t c = 0; c < kNumClasses; ++c)
            max_logit = std::max(max_logit, kSharpness * kWeight[c] * fraction[c]);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            e[c] = std::exp(kSharpness * kWeight[c] * fraction[c] - max_logit);
            denom += e[c];
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) out.scores[c] = e[c] / denom;
        return out;
    }

    static ClassLabel classify_pixel(const RgbPixel& p) {
        const int r = p.r, g = p.g, b = p.b;
        const int brightness = (r + g + b) / 3;
        const int v = std::max({r, g, b});
        const int saturation = v - std::min({r, g, b});
        if (brightness < 110 && b > g) return ClassLabel::Bunch;
        if (v > 180 && saturation < 40) return ClassLabel::Pole;
        if (r > g && g > b && r - b > 40) return ClassLabel::Wood;
        if (g >= r && g >= b && g > 60) return ClassLabel::Leaves;
        return ClassLabel::Background;
    }
};

namespace wire_detail {

inline ClassScores parse_scores_line(const std::string& line, int expect_id) {
    std::istringstream ss(line);
    std::string tag;
    int id;
    if (!(ss >> tag >> id) || tag != "SCORES")
        throw ClassifierError("classifier: bad response line '" + line + "'", expect_id);
    if (id != expect_id)
        throw ClassifierError("classifier: response id mismatch", expect_id);
    ClassScores s;
    // wire order: bunch pole wood leaves background
    double vb, vp, vw, vl, vbg;
    if (!(ss >> vb >> vp >> vw >> vl >> vbg))
        throw ClassifierError("classifier: short score line", expect_id);
    s[ClassLabel::Bunch] = vb;
    s[ClassLabel::Pole] = vp;
    s[ClassLabel::Wood] = vw;
    s[ClassLabel::Leaves] = vl;
    s[ClassLabel::Background] = vbg;
    if (std::abs(s.sum() - 1.0) > 1e-6)
        throw ClassifierError("classifier: scores do not sum to 1", expect_id);
    return s;
}

inline std::string request_header(int id, const RgbImage& patch) {
    std::ostringstream os;
    os << "PATCH " << id << " " << patch.width() << " " << patch.height() << "\n";
    return os.str();
}

inline std::vector<std::uint8_t> patch_bytes(const RgbImage& patch) {
    std::vector<std::uint8_t> buf;
    buf.reserve(patch.size() * 3);
    for (const RgbPixel& p : patch.data()) {
        buf.push_back(p.r);
        buf.push_back(p.g);
        buf.push_back(p.b);
    }
    return buf;
}

// write all / read line with a poll() deadline on a nonblocking-safe fd
inline void write_all(int fd, const void* data, std::size_t len, int timeout_ms, int id) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        pollfd pfd{fd, POLLOUT, 0};
        const int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc <= 0) throw ClassifierError("classifier: write timeout", id);
        const ssize_t n = ::write(fd, p, len);
        if (n <= 0) throw ClassifierError("classifier: write failed", id);
        p += n;
        len -= static_cast<std::size_t>(n);
    }
}

inline std::string read_line(int fd, int timeout_ms, int id) {
    std::string line;
    char c;
    for (;;) {
        pollfd pfd{fd, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc <= 0) throw ClassifierError("classifier: read timeout", id);
        const ssize_t n = ::read(fd, &c, 1);
        if (n <= 0) throw ClassifierError("classifier: connection closed", id);
        if (c == '\n') return line;
        line.push_back(c);
        if (line.size() > 4096) throw ClassifierError("classifier: oversized response", id);
    }
}

}  // namespace wire_detail

/// Spawns a subprocess and exchanges patches over its stdin/stdout.
class ProcessClassifier : public PatchClassifier {
public:
    explicit ProcessClassifier(std::vector<std::string> argv, int timeout_ms = 10000)
        : timeout_ms_(timeout_ms) {
        if (argv.empty()) throw ParameterError("ProcessClassifier: empty command");
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            throw IoError("ProcessClassifier: pipe failed");
        pid_ = ::fork();
        if (pid_ < 0) throw IoError("ProcessClassifier: fork failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            std::vector<char*> cargv;
            for (auto& a : argv) cargv.push_back(a.data());
            cargv.push_back(nullptr);
            ::execvp(cargv[0], cargv.data());
            _exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
    }

    ~ProcessClassifier() override {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        if (pid_ > 0) {
            int status;
            ::waitpid(pid_, &status, 0);
        }
    }

    ProcessClassifier(const ProcessClassifier&) = delete;
    ProcessClassifier& operator=(const ProcessClassifier&) = delete;

    ClassScores classify(const RgbImage& patch, int patch_id) override {
        const std::string header = wire_detail::request_header(patch_id, patch);
        const auto body = wire_detail::patch_bytes(patch);
        wire_detail::write_all(write_fd_, header.data(), header.size(), timeout_ms_, patch_id);
        wire_detail::write_all(write_fd_, body.data(), body.size(), timeout_ms_, patch_id);
        return wire_detail::parse_scores_line(
            wire_detail::read_line(read_fd_, timeout_ms_, patch_id), patch_id);
    }

private:
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    int timeout_ms_;
};

/// Same protocol over a TCP connection.
class TcpClassifier : public PatchClassifier {
public:
    TcpClassifier(const std::string& host, int port, int timeout_ms = 10000)
        : timeout_ms_(timeout_ms) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw IoError("TcpClassifier: socket failed");
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        hostent* he = ::gethostbyname(host.c_str());
        if (!he) {
            ::close(fd_);
            throw IoError("TcpClassifier: cannot resolve " + host);
        }
        std::memcpy(&addr.sin_addr, he->h_addr, static_cast<std::size_t>(he->h_length));
        if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            ::close(fd_);
            throw IoError("TcpClassifier: connect to " + host + " failed");
        }
    }

    ~TcpClassifier() override {
        if (fd_ >= 0) ::close(fd_);
    }

    TcpClassifier(const TcpClassifier&) = delete;
    TcpClassifier& operator=(const TcpClassifier&) = delete;

    ClassScores classify(const RgbImage& patch, int patch_id) override {
        const std::string header = wire_detail::request_header(patch_id, patch);
        const auto body = wire_detail::patch_bytes(patch);
        wire_detail::write_all(fd_, header.data(), header.size(), timeout_ms_, patch_id);
        wire_detail::write_all(fd_, body.data(), body.size(), timeout_ms_, patch_id);
        return wire_detail::parse_scores_line(
            wire_detail::read_line(fd_, timeout_ms_, patch_id), patch_id);
    }

private:
    int fd_ = -1;
    int timeout_ms_;
};

}  // namespace vinescan
