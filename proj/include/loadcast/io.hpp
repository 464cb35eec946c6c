#ifndef LOADCAST_IO_HPP
#define LOADCAST_IO_HPP

#include <string>
#include <vector>

namespace loadcast {

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace loadcast

#endif
