#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>

#include "lt/error.hpp"
#include "lt/evalharness.hpp"

namespace lt {

namespace fs = std::filesystem;

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  ~Pipe() {
    for (int f : fd)
      if (f >= 0) ::close(f);
  }
  void close_end(int i) {
    if (fd[i] >= 0) ::close(fd[i]);
    fd[i] = -1;
  }
};

}  // namespace

SandboxResult run_command(const std::string& command, double timeout_seconds, const fs::path& cwd) {
  Pipe out, err;
  if (::pipe2(out.fd, O_CLOEXEC) != 0 || ::pipe2(err.fd, O_CLOEXEC) != 0) {
    throw IoFailure(std::string("pipe: ") + std::strerror(errno));
  }
  const std::string dir = cwd.string();
  const auto start = std::chrono::steady_clock::now();

  pid_t pid = ::fork();
  if (pid < 0) throw IoFailure(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    if (!dir.empty() && ::chdir(dir.c_str()) != 0) ::_exit(126);
    ::dup2(out.fd[1], STDOUT_FILENO);
    ::dup2(err.fd[1], STDERR_FILENO);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  out.close_end(1);
  err.close_end(1);

  SandboxResult result;
  const auto deadline = start + std::chrono::duration<double>(timeout_seconds);
  pollfd fds[2] = {{out.fd[0], POLLIN, 0}, {err.fd[0], POLLIN, 0}};
  std::string* sinks[2] = {&result.stdout_text, &result.stderr_text};
  int open_streams = 2;
  char buf[4096];

  while (open_streams > 0) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    int rc = ::poll(fds, 2, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else {
        fds[i].fd = -1;
        --open_streams;
      }
    }
  }

  int status = 0;
  if (!result.timed_out) {
    // Streams closed; the shell may still be exiting.
    for (;;) {
      pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        result.timed_out = true;
        break;
      }
      ::usleep(2000);
    }
  }
  if (result.timed_out) {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    result.exit_code = kTimeoutExitCode;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  result.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

fs::path sandbox_root() {
  if (const char* env = std::getenv("LT_SANDBOX_DIR"); env && *env) return fs::path(env);
  return fs::temp_directory_path();
}

Workdir Workdir::create() {
  fs::path root = sandbox_root();
  std::error_code ec;
  fs::create_directories(root, ec);
  std::string templ = (root / "lt-work-XXXXXX").string();
  if (::mkdtemp(templ.data()) == nullptr) {
    throw WorkdirCreationFailure("cannot create work directory under " + root.string() + ": " +
                                 std::strerror(errno));
  }
  return Workdir(fs::path(templ));
}

Workdir::Workdir(Workdir&& other) noexcept : path_(std::move(other.path_)) { other.path_.clear(); }

Workdir& Workdir::operator=(Workdir&& other) noexcept {
  if (this != &other) {
    release();
    path_ = std::move(other.path_);
    other.path_.clear();
  }
  return *this;
}

Workdir::~Workdir() { release(); }

void Workdir::release() {
  if (path_.empty()) return;
  if (!std::getenv("LT_KEEP_SANDBOX")) {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  path_.clear();
}

std::string substitute(std::string templ, const std::string& name, const std::string& value) {
  const std::string key = "{" + name + "}";
  for (std::size_t pos = templ.find(key); pos != std::string::npos; pos = templ.find(key, pos + value.size())) {
    templ.replace(pos, key.size(), value);
  }
  return templ;
}

}  // namespace lt
