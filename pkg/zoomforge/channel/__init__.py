from .capacity import capacity, mutual_information
from .channels import ChannelModel, build_channel, read_kernel_csv, transmit
