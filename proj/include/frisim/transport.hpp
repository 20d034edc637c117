// SPDX-License-Identifier: Apache-2.0
//
// POSIX transports for the bridge: file descriptors (stdio) and TCP with one
// thread and one environment per accepted connection.
#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <poll.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <streambuf>
#include <thread>
#include <vector>

#include "frisim/bridge.hpp"

namespace frisim::bridge {

class TransportError : public Error {
 public:
  using Error::Error;
};

// Minimal bidirectional streambuf over a file descriptor. A read interrupted
// by a signal ends the stream when `stop` is set.
class FdStreamBuf : public std::streambuf {
 public:
  explicit FdStreamBuf(int fd, const std::atomic<bool>* stop = nullptr) : fd_(fd), stop_(stop) {
    setg(in_, in_, in_);
    setp(out_, out_ + sizeof out_);
  }
  ~FdStreamBuf() override { sync(); }

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    ssize_t n = -1;
    while (!(stop_ && stop_->load())) {
      if (stop_) {
        // a signal that lands just before read() would otherwise be missed
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) == 0) continue;
      }
      n = ::read(fd_, in_, sizeof in_);
      if (n >= 0 || errno != EINTR) break;
    }
    if (n <= 0) return traits_type::eof();
    setg(in_, in_, in_ + n);
    return traits_type::to_int_type(*gptr());
  }

  int_type overflow(int_type ch) override {
    if (sync() != 0) return traits_type::eof();
    if (!traits_type::eq_int_type(ch, traits_type::eof())) {
      *pptr() = traits_type::to_char_type(ch);
      pbump(1);
    }
    return traits_type::not_eof(ch);
  }

  int sync() override {
    const char* p = pbase();
    while (p < pptr()) {
      const ssize_t n = ::write(fd_, p, static_cast<std::size_t>(pptr() - p));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return -1;
      p += n;
    }
    setp(out_, out_ + sizeof out_);
    return 0;
  }

 private:
  int fd_;
  const std::atomic<bool>* stop_;
  char in_[4096];
  char out_[4096];
};

struct TcpSummary {
  std::uint64_t sessions = 0;
  SessionSummary totals;
};

class TcpServer {
 public:
  // Binds 127.0.0.1:port (0 picks a free port).
  TcpServer(ScenarioConfig cfg, std::uint16_t port) : cfg_(std::move(cfg)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    const int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
      const std::string err = std::strerror(errno);
      ::close(fd_);
      throw TransportError("cannot listen on port " + std::to_string(port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  ~TcpServer() {
    stop();
    for (auto& t : workers_)
      if (t.joinable()) t.join();
  }

  std::uint16_t port() const { return port_; }

  // Accepts connections until stop(). Joins all sessions before returning.
  TcpSummary run() {
    for (;;) {
      const int listener = fd_.load();
      if (listener < 0) break;
      const int conn = ::accept(listener, nullptr, nullptr);
      if (conn < 0) {
        if (errno == EINTR) continue;
        break;
      }
      {
        std::lock_guard lock(mu_);
        if (fd_.load() < 0) {
          ::close(conn);
          break;
        }
        open_.insert(conn);
      }
      workers_.emplace_back([this, conn] {
        FdStreamBuf buf(conn);
        std::istream in(&buf);
        std::ostream out(&buf);
        Session session(cfg_);
        auto s = serve(session, in, out);
        out.flush();
        std::lock_guard lock(mu_);
        open_.erase(conn);
        ::shutdown(conn, SHUT_RDWR);
        ::close(conn);
        ++summary_.sessions;
        summary_.totals.requests += s.requests;
        summary_.totals.errors += s.errors;
        summary_.totals.resets += s.resets;
        summary_.totals.steps += s.steps;
      });
    }
    for (auto& t : workers_)
      if (t.joinable()) t.join();
    std::lock_guard lock(mu_);
    return summary_;
  }

  // Closes the listener and ends every open session at its next read.
  void stop() {
    std::lock_guard lock(mu_);
    const int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
    for (int c : open_) ::shutdown(c, SHUT_RD);
  }

 private:
  ScenarioConfig cfg_;
  std::atomic<int> fd_{-1};
  std::uint16_t port_ = 0;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::set<int> open_;
  TcpSummary summary_;
};

}  // namespace frisim::bridge
