#include "rnarl/external_fold.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <regex>

#include "rnarl/errors.hpp"

namespace rnarl {

FoldResult parse_fold_reply(std::string_view line, std::size_t expected_length) {
  static const std::regex kReply(
      R"(^\s*([.()]+)\s+\(\s*([-+]?(?:\d+\.?\d*|\.\d+))\s*\)\s*$)");
  const std::string text(line);
  std::smatch m;
  if (!std::regex_match(text, m, kReply)) throw ProtocolError(text);
  const std::string structure = m[1].str();
  if (structure.size() != expected_length) {
    throw LengthMismatch("structure has " + std::to_string(structure.size()) +
                         " positions, expected " +
                         std::to_string(expected_length));
  }
  FoldResult result;
  try {
    result.structure = SecondaryStructure::from_dot_bracket(structure);
  } catch (const Error&) {
    throw ProtocolError(text);
  }
  result.energy = std::stod(m[2].str());
  return result;
}

struct ExternalFoldModel::Process {
  pid_t pid = -1;
  int to_child = -1;
  FILE* from_child = nullptr;

  ~Process() {
    if (to_child >= 0) ::close(to_child);
    if (from_child != nullptr) std::fclose(from_child);
    if (pid > 0) {
      int status = 0;
      ::waitpid(pid, &status, 0);
    }
  }

  static std::unique_ptr<Process> spawn(const std::string& command) {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) throw ProgramUnavailable("pipe() failed");
    if (::pipe(out_pipe) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw ProgramUnavailable("pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) {
        ::close(fd);
      }
      throw ProgramUnavailable("fork() failed");
    }
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) {
        ::close(fd);
      }
      ::execl("/bin/sh", "sh", "-c", command.c_str(),
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    auto p = std::make_unique<Process>();
    p->pid = pid;
    p->to_child = in_pipe[1];
    p->from_child = ::fdopen(out_pipe[0], "r");
    if (p->from_child == nullptr) {
      ::close(out_pipe[0]);
      throw ProgramUnavailable("fdopen() failed");
    }
    return p;
  }

  bool write_line(const std::string& line) {
    std::string buf = line + "\n";
    const char* data = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      const ssize_t n = ::write(to_child, data, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      data += n;
      left -= static_cast<std::size_t>(n);
    }
    return true;
  }

  bool read_line(std::string& out) {
    out.clear();
    int c;
    while ((c = std::fgetc(from_child)) != EOF) {
      if (c == '\n') return true;
      out.push_back(static_cast<char>(c));
    }
    return !out.empty();
  }
};

ExternalFoldModel::ExternalFoldModel(std::string command)
    : command_(std::move(command)) {
  // A dead child must surface as ProgramUnavailable, not kill the process.
  ::signal(SIGPIPE, SIG_IGN);
}

ExternalFoldModel::~ExternalFoldModel() = default;

FoldResult ExternalFoldModel::fold(const RnaSequence& s) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!process_) process_ = Process::spawn(command_);
  const std::string seq = s.str();
  if (!process_->write_line(seq)) {
    process_.reset();
    throw ProgramUnavailable("cannot write to folding program: " + command_);
  }
  std::string line;
  while (true) {
    if (!process_->read_line(line)) {
      process_.reset();
      throw ProgramUnavailable("folding program closed its output: " +
                               command_);
    }
    // RNAfold echoes the input; also skip blank lines and FASTA headers.
    std::string upper = line;
    for (auto& c : upper) c = static_cast<char>(std::toupper(c));
    if (line.empty() || line[0] == '>' || upper == seq) continue;
    if (upper.find_first_not_of("ACGUT") == std::string::npos) continue;
    return parse_fold_reply(line, s.size());
  }
}

}  // namespace rnarl
